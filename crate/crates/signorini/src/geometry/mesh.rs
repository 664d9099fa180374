use std::collections::HashMap;

use nalgebra::{Matrix3, Matrix3x4, Vector3};

use crate::error::{LabError, Result};

/// A boundary triangle with its outward area vector (`|area_vector|` is the area).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTri {
    pub nodes: [usize; 3],
    pub area_vector: Vector3<f64>,
}

impl BoundaryTri {
    pub fn area(&self) -> f64 {
        self.area_vector.norm()
    }

    pub fn normal(&self) -> Vector3<f64> {
        self.area_vector / self.area()
    }
}

/// Shape of the meshed domain as detected from its boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainShape {
    /// Axis-aligned box `[min, max]`, tiled exactly by the mesh.
    Box {
        min: Vector3<f64>,
        max: Vector3<f64>,
    },
    General,
}

/// One face of an axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoxFace {
    XMin,
    XMax,
    YMin,
    YMax,
    Bottom,
    Top,
}

impl BoxFace {
    pub const ALL: [BoxFace; 6] =
        [BoxFace::XMin, BoxFace::XMax, BoxFace::YMin, BoxFace::YMax, BoxFace::Bottom, BoxFace::Top];

    pub fn axis(self) -> usize {
        match self {
            BoxFace::XMin | BoxFace::XMax => 0,
            BoxFace::YMin | BoxFace::YMax => 1,
            BoxFace::Bottom | BoxFace::Top => 2,
        }
    }

    /// `true` for the face where the outward normal points along `+e_axis`.
    pub fn is_upper(self) -> bool {
        matches!(self, BoxFace::XMax | BoxFace::YMax | BoxFace::Top)
    }

    pub fn name(self) -> &'static str {
        match self {
            BoxFace::XMin => "xmin",
            BoxFace::XMax => "xmax",
            BoxFace::YMin => "ymin",
            BoxFace::YMax => "ymax",
            BoxFace::Bottom => "bottom",
            BoxFace::Top => "top",
        }
    }

    pub fn parse(name: &str) -> Option<BoxFace> {
        match name {
            "xmin" => Some(BoxFace::XMin),
            "xmax" => Some(BoxFace::XMax),
            "ymin" => Some(BoxFace::YMin),
            "ymax" => Some(BoxFace::YMax),
            "bottom" | "zmin" => Some(BoxFace::Bottom),
            "top" | "zmax" => Some(BoxFace::Top),
            _ => None,
        }
    }
}

/// Tetrahedral mesh of the reference configuration with P1 gradient operators.
///
/// Element gradient maps are stored column-wise: column `a` of
/// `gradient_maps[e]` is the gradient of the barycentric coordinate of local
/// node `a`, so the gradient of a nodal field `v` on element `e` is
/// `sum_a v[tet[a]] * column(a)^T`.
#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<Vector3<f64>>,
    tets: Vec<[usize; 4]>,
    boundary_tris: Vec<BoundaryTri>,
    element_volumes: Vec<f64>,
    gradient_maps: Vec<Matrix3x4<f64>>,
    shape: DomainShape,
}

fn signed_volume(p: &[Vector3<f64>; 4]) -> f64 {
    (p[1] - p[0]).cross(&(p[2] - p[0])).dot(&(p[3] - p[0])) / 6.0
}

impl Mesh {
    /// Builds a mesh from nodes and tets. Negatively oriented tets are
    /// reoriented; degenerate or non-manifold input is rejected.
    pub fn new(nodes: Vec<Vector3<f64>>, mut tets: Vec<[usize; 4]>) -> Result<Mesh> {
        if nodes.is_empty() || tets.is_empty() {
            return Err(LabError::InvalidInput("mesh needs at least one node and one tet".into()));
        }
        let mut lo = nodes[0];
        let mut hi = nodes[0];
        for p in &nodes {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(LabError::InvalidInput("non-finite node coordinate".into()));
            }
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let diag = (hi - lo).norm().max(f64::MIN_POSITIVE);

        let mut element_volumes = Vec::with_capacity(tets.len());
        let mut gradient_maps = Vec::with_capacity(tets.len());
        for (e, tet) in tets.iter_mut().enumerate() {
            for &i in tet.iter() {
                if i >= nodes.len() {
                    return Err(LabError::InvalidInput(format!("tet {e} references node {i} out of range")));
                }
            }
            let mut p = tet.map(|i| nodes[i]);
            let mut vol = signed_volume(&p);
            if vol.abs() <= 1e-14 * diag.powi(3) {
                return Err(LabError::InvalidInput(format!("tet {e} is degenerate")));
            }
            if vol < 0.0 {
                tet.swap(2, 3);
                p.swap(2, 3);
                vol = -vol;
            }
            element_volumes.push(vol);
            gradient_maps.push(barycentric_gradients(&p));
        }

        let boundary_tris = extract_boundary(&nodes, &tets)?;
        let mut mesh = Mesh { nodes, tets, boundary_tris, element_volumes, gradient_maps, shape: DomainShape::General };
        mesh.shape = mesh.detect_shape(lo, hi);
        Ok(mesh)
    }

    fn detect_shape(&self, lo: Vector3<f64>, hi: Vector3<f64>) -> DomainShape {
        let ext = hi - lo;
        let box_volume = ext.x * ext.y * ext.z;
        if (self.volume() - box_volume).abs() > 1e-12 * box_volume {
            return DomainShape::General;
        }
        let tol = 1e-12 * ext.norm();
        for tri in &self.boundary_tris {
            if self.box_face_of(tri, lo, hi, tol).is_none() {
                return DomainShape::General;
            }
        }
        DomainShape::Box { min: lo, max: hi }
    }

    fn box_face_of(&self, tri: &BoundaryTri, lo: Vector3<f64>, hi: Vector3<f64>, tol: f64) -> Option<BoxFace> {
        let n = tri.normal();
        BoxFace::ALL.into_iter().find(|face| {
            let axis = face.axis();
            let sign = if face.is_upper() { 1.0 } else { -1.0 };
            let plane = if face.is_upper() { hi[axis] } else { lo[axis] };
            (n[axis] - sign).abs() <= 1e-10 && tri.nodes.iter().all(|&i| (self.nodes[i][axis] - plane).abs() <= tol)
        })
    }

    pub fn nodes(&self) -> &[Vector3<f64>] {
        &self.nodes
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn boundary_tris(&self) -> &[BoundaryTri] {
        &self.boundary_tris
    }

    pub fn element_volumes(&self) -> &[f64] {
        &self.element_volumes
    }

    pub fn gradient_maps(&self) -> &[Matrix3x4<f64>] {
        &self.gradient_maps
    }

    pub fn shape(&self) -> DomainShape {
        self.shape
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.tets.len()
    }

    pub fn volume(&self) -> f64 {
        self.element_volumes.iter().sum()
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Vector3<f64>, Vector3<f64>) {
        self.nodes.iter().fold((self.nodes[0], self.nodes[0]), |(lo, hi), p| (lo.inf(p), hi.sup(p)))
    }

    pub fn centroid(&self, e: usize) -> Vector3<f64> {
        self.tets[e].iter().map(|&i| self.nodes[i]).sum::<Vector3<f64>>() / 4.0
    }

    /// Constant gradient `(∂v_i/∂x_j)` of a nodal vector field on element `e`.
    pub fn element_gradient(&self, e: usize, field: &[Vector3<f64>]) -> Matrix3<f64> {
        let g = &self.gradient_maps[e];
        let mut out = Matrix3::zeros();
        for (a, &node) in self.tets[e].iter().enumerate() {
            out += field[node] * g.column(a).transpose();
        }
        out
    }

    /// Gradients of a nodal vector field on every element.
    pub fn gradients(&self, field: &[Vector3<f64>]) -> Result<Vec<Matrix3<f64>>> {
        self.check_nodal(field.len())?;
        Ok((0..self.num_elements()).map(|e| self.element_gradient(e, field)).collect())
    }

    pub fn check_nodal(&self, len: usize) -> Result<()> {
        if len != self.nodes.len() {
            return Err(LabError::SizeMismatch { expected: self.nodes.len(), got: len });
        }
        Ok(())
    }

    pub fn check_elemental(&self, len: usize) -> Result<()> {
        if len != self.tets.len() {
            return Err(LabError::SizeMismatch { expected: self.tets.len(), got: len });
        }
        Ok(())
    }

    /// Boundary triangles lying on the given face of the bounding box.
    pub fn face_triangles(&self, face: BoxFace) -> Vec<usize> {
        let (lo, hi) = self.bounding_box();
        let tol = 1e-12 * (hi - lo).norm();
        self.boundary_tris
            .iter()
            .enumerate()
            .filter(|(_, tri)| self.box_face_of(tri, lo, hi, tol) == Some(face))
            .map(|(i, _)| i)
            .collect()
    }

    /// Marks nodes that lie on at least one boundary triangle.
    pub fn boundary_node_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.nodes.len()];
        for tri in &self.boundary_tris {
            for &i in &tri.nodes {
                mask[i] = true;
            }
        }
        mask
    }

    /// Applies `map` to every node; fails if the result is not a valid mesh.
    pub fn map_nodes(&self, map: impl Fn(&Vector3<f64>) -> Vector3<f64>) -> Result<Mesh> {
        Mesh::new(self.nodes.iter().map(map).collect(), self.tets.clone())
    }

    /// Uniform red refinement: every tet is split into eight children.
    /// Returns the refined mesh and, for each child, the index of its parent.
    pub fn refine_red(&self) -> Result<(Mesh, Vec<usize>)> {
        let mut nodes = self.nodes.clone();
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, nodes: &mut Vec<Vector3<f64>>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                nodes.push((nodes[a] + nodes[b]) / 2.0);
                nodes.len() - 1
            })
        };
        let mut tets = Vec::with_capacity(8 * self.tets.len());
        let mut parent = Vec::with_capacity(8 * self.tets.len());
        for (e, t) in self.tets.iter().enumerate() {
            let [x0, x1, x2, x3] = *t;
            let m01 = mid(x0, x1, &mut nodes);
            let m02 = mid(x0, x2, &mut nodes);
            let m03 = mid(x0, x3, &mut nodes);
            let m12 = mid(x1, x2, &mut nodes);
            let m13 = mid(x1, x3, &mut nodes);
            let m23 = mid(x2, x3, &mut nodes);
            let children = [
                [x0, m01, m02, m03],
                [m01, x1, m12, m13],
                [m02, m12, x2, m23],
                [m03, m13, m23, x3],
                [m01, m02, m03, m13],
                [m01, m02, m12, m13],
                [m02, m03, m13, m23],
                [m02, m12, m13, m23],
            ];
            tets.extend(children);
            parent.extend([e; 8]);
        }
        Ok((Mesh::new(nodes, tets)?, parent))
    }
}

/// Columns are the gradients of the four barycentric coordinates.
fn barycentric_gradients(p: &[Vector3<f64>; 4]) -> Matrix3x4<f64> {
    let m = Matrix3::from_columns(&[p[1] - p[0], p[2] - p[0], p[3] - p[0]]);
    // Rows of m^{-1} are the gradients of lambda_1..lambda_3.
    let inv = m.try_inverse().expect("non-degenerate tet");
    let mut out = Matrix3x4::zeros();
    let mut sum = Vector3::zeros();
    for a in 0..3 {
        let g = inv.row(a).transpose();
        out.set_column(a + 1, &g);
        sum += g;
    }
    out.set_column(0, &(-sum));
    out
}

const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

fn extract_boundary(nodes: &[Vector3<f64>], tets: &[[usize; 4]]) -> Result<Vec<BoundaryTri>> {
    // Count every face; insertion order is kept for deterministic output.
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut faces: Vec<([usize; 3], usize, usize)> = Vec::new(); // (nodes, opposite node, count)
    for t in tets {
        for (opp, f) in TET_FACES.iter().enumerate() {
            let tri = [t[f[0]], t[f[1]], t[f[2]]];
            let mut key = tri;
            key.sort_unstable();
            match index.get(&key) {
                Some(&k) => faces[k].2 += 1,
                None => {
                    index.insert(key, faces.len());
                    faces.push((tri, t[opp], 1));
                }
            }
        }
    }
    let mut out = Vec::new();
    for (tri, opp, count) in faces {
        match count {
            1 => {
                let [a, b, c] = tri;
                let n = (nodes[b] - nodes[a]).cross(&(nodes[c] - nodes[a]));
                let (tri, n) = if n.dot(&(nodes[opp] - nodes[a])) > 0.0 { ([a, c, b], -n) } else { (tri, n) };
                out.push(BoundaryTri { nodes: tri, area_vector: n / 2.0 });
            }
            2 => {}
            _ => return Err(LabError::InvalidInput(format!("face {tri:?} is shared by {count} tets"))),
        }
    }
    Ok(out)
}

/// Kuhn subdivision of the box `[min, max]` into `n[0]·n[1]·n[2]` cells of six tets.
///
/// Node `(i, j, k)` has index `(i (n1+1) + j)(n2+1) + k`.
pub fn build_box_mesh(min: Vector3<f64>, max: Vector3<f64>, n: [usize; 3]) -> Result<Mesh> {
    if n.contains(&0) {
        return Err(LabError::InvalidInput("subdivision counts must be at least 1".into()));
    }
    if (0..3).any(|a| max[a] <= min[a]) {
        return Err(LabError::InvalidInput("box must have positive extent".into()));
    }
    let [nx, ny, nz] = n;
    let idx = |i: usize, j: usize, k: usize| (i * (ny + 1) + j) * (nz + 1) + k;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for i in 0..=nx {
        for j in 0..=ny {
            for k in 0..=nz {
                let t = Vector3::new(i as f64 / nx as f64, j as f64 / ny as f64, k as f64 / nz as f64);
                let mut p = min + (max - min).component_mul(&t);
                // Pin the far faces exactly.
                if i == nx {
                    p.x = max.x;
                }
                if j == ny {
                    p.y = max.y;
                }
                if k == nz {
                    p.z = max.z;
                }
                nodes.push(p);
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut tets = Vec::with_capacity(6 * nx * ny * nz);
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                for perm in PERMS {
                    let mut c = [i, j, k];
                    let mut tet = [idx(c[0], c[1], c[2]); 4];
                    for (s, &axis) in perm.iter().enumerate() {
                        c[axis] += 1;
                        tet[s + 1] = idx(c[0], c[1], c[2]);
                    }
                    tets.push(tet);
                }
            }
        }
    }
    Mesh::new(nodes, tets)
}

/// The unit cube `[0,1]^3` with `n` cells per axis.
pub fn build_unit_cube_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(LabError::InvalidInput("unit cube mesh needs n >= 1".into()));
    }
    build_box_mesh(Vector3::zeros(), Vector3::repeat(1.0), [n, n, n])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det4(p: [Vector3<f64>; 4]) -> f64 {
        // Independent routine: cofactor expansion of the 4x4 homogeneous matrix.
        let m = nalgebra::Matrix4::from_fn(|r, c| if c == 3 { 1.0 } else { p[r][c] });
        -m.determinant() / 6.0
    }

    #[test]
    fn unit_cube_counts_and_volume() {
        let m1 = build_unit_cube_mesh(1).unwrap();
        assert_eq!(m1.num_nodes(), 8);
        assert_eq!(m1.num_elements(), 6);
        assert!((m1.volume() - 1.0).abs() < 1e-14);

        let m2 = build_unit_cube_mesh(2).unwrap();
        assert_eq!(m2.num_elements(), 48);
        let independent: f64 = m2.tets().iter().map(|t| det4(t.map(|i| m2.nodes()[i])).abs()).sum();
        assert!((independent - 1.0).abs() < 1e-12);
        assert!(m2.element_volumes().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn zero_subdivision_rejected() {
        assert!(build_unit_cube_mesh(0).is_err());
    }

    #[test]
    fn coordinate_gradient_is_identity() {
        for n in 1..4 {
            let m = build_unit_cube_mesh(n).unwrap();
            let x: Vec<_> = m.nodes().to_vec();
            for g in m.gradients(&x).unwrap() {
                assert!((g - Matrix3::identity()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn boundary_tiles_surface_once() {
        let m = build_unit_cube_mesh(3).unwrap();
        let area: f64 = m.boundary_tris().iter().map(|t| t.area()).sum();
        assert!((area - 6.0).abs() < 1e-12);
        // Outward area vectors of a closed surface sum to zero.
        let total: Vector3<f64> = m.boundary_tris().iter().map(|t| t.area_vector).sum();
        assert!(total.norm() < 1e-12);
        for face in BoxFace::ALL {
            let a: f64 = m.face_triangles(face).iter().map(|&i| m.boundary_tris()[i].area()).sum();
            assert!((a - 1.0).abs() < 1e-12, "{face:?}");
        }
        assert!(matches!(m.shape(), DomainShape::Box { .. }));
    }

    #[test]
    fn red_refinement_is_nested_and_conforming() {
        let m = build_unit_cube_mesh(1).unwrap();
        let (fine, parent) = m.refine_red().unwrap();
        assert_eq!(fine.num_elements(), 48);
        assert_eq!(fine.num_nodes(), 27);
        assert!((fine.volume() - 1.0).abs() < 1e-13);
        let area: f64 = fine.boundary_tris().iter().map(|t| t.area()).sum();
        assert!((area - 6.0).abs() < 1e-12);
        let mut per_parent = vec![0.0; m.num_elements()];
        for (e, &p) in parent.iter().enumerate() {
            per_parent[p] += fine.element_volumes()[e];
        }
        for (p, v) in per_parent.iter().enumerate() {
            assert!((v - m.element_volumes()[p]).abs() < 1e-14);
        }
    }

    #[test]
    fn negative_orientation_is_repaired() {
        let nodes = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.0, 0.0, 1.0),
        ];
        let m = Mesh::new(nodes, vec![[0, 2, 1, 3]]).unwrap();
        assert!((m.volume() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(m.boundary_tris().len(), 4);
        assert_eq!(m.shape(), DomainShape::General);
    }
}
