use nalgebra::Vector3;

use super::mesh::Mesh;

/// Uniform bucket grid for point-in-tet queries.
#[derive(Debug, Clone)]
pub struct PointLocator {
    origin: Vector3<f64>,
    cell: Vector3<f64>,
    dims: [usize; 3],
    buckets: Vec<Vec<usize>>,
}

/// Barycentric coordinates of `x` in element `e`.
pub fn barycentric(mesh: &Mesh, e: usize, x: &Vector3<f64>) -> [f64; 4] {
    let g = &mesh.gradient_maps()[e];
    let t = mesh.tets()[e];
    let p0 = mesh.nodes()[t[0]];
    let d = x - p0;
    let mut lam = [0.0; 4];
    for (a, l) in lam.iter_mut().enumerate().skip(1) {
        *l = g.column(a).dot(&d);
    }
    lam[0] = 1.0 - lam[1] - lam[2] - lam[3];
    lam
}

impl PointLocator {
    pub fn new(mesh: &Mesh) -> PointLocator {
        let (lo, hi) = mesh.bounding_box();
        let ext = hi - lo;
        let target = (mesh.num_elements() as f64).cbrt().ceil().max(1.0) as usize;
        let dims = [target, target, target];
        let cell = Vector3::new(ext.x / target as f64, ext.y / target as f64, ext.z / target as f64);
        let mut buckets = vec![Vec::new(); target * target * target];
        let locator_shape = PointLocator { origin: lo, cell, dims, buckets: Vec::new() };
        for (e, t) in mesh.tets().iter().enumerate() {
            let (elo, ehi) = t
                .iter()
                .map(|&i| mesh.nodes()[i])
                .fold((Vector3::repeat(f64::INFINITY), Vector3::repeat(f64::NEG_INFINITY)), |(a, b), p| {
                    (a.inf(&p), b.sup(&p))
                });
            let a = locator_shape.cell_of(&elo);
            let b = locator_shape.cell_of(&ehi);
            for i in a[0]..=b[0] {
                for j in a[1]..=b[1] {
                    for k in a[2]..=b[2] {
                        buckets[(i * dims[1] + j) * dims[2] + k].push(e);
                    }
                }
            }
        }
        PointLocator { buckets, ..locator_shape }
    }

    fn cell_of(&self, x: &Vector3<f64>) -> [usize; 3] {
        let mut c = [0; 3];
        for a in 0..3 {
            let f = ((x[a] - self.origin[a]) / self.cell[a]).floor();
            c[a] = f.clamp(0.0, (self.dims[a] - 1) as f64) as usize;
        }
        c
    }

    /// Element containing `x` and its barycentric coordinates.
    ///
    /// Points within `tol` (in barycentric units) of an element count as
    /// inside; among candidates the most interior one is returned.
    pub fn locate(&self, mesh: &Mesh, x: &Vector3<f64>, tol: f64) -> Option<(usize, [f64; 4])> {
        let c = self.cell_of(x);
        let bucket = &self.buckets[(c[0] * self.dims[1] + c[1]) * self.dims[2] + c[2]];
        let mut best: Option<(usize, [f64; 4], f64)> = None;
        for &e in bucket {
            let lam = barycentric(mesh, e, x);
            let worst = lam.iter().copied().fold(f64::INFINITY, f64::min);
            if worst >= -tol && best.as_ref().is_none_or(|b| worst > b.2) {
                best = Some((e, lam, worst));
                if worst >= 0.0 {
                    break;
                }
            }
        }
        best.map(|(e, lam, _)| (e, lam))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::build_unit_cube_mesh;

    #[test]
    fn locates_every_centroid_in_its_element() {
        let m = build_unit_cube_mesh(3).unwrap();
        let loc = PointLocator::new(&m);
        for e in 0..m.num_elements() {
            let (found, lam) = loc.locate(&m, &m.centroid(e), 1e-12).unwrap();
            assert_eq!(found, e);
            assert!(lam.iter().all(|l| (l - 0.25).abs() < 1e-12));
        }
    }

    #[test]
    fn boundary_points_are_found_and_outside_points_are_not() {
        let m = build_unit_cube_mesh(2).unwrap();
        let loc = PointLocator::new(&m);
        assert!(loc.locate(&m, &Vector3::new(1.0, 1.0, 1.0), 1e-12).is_some());
        assert!(loc.locate(&m, &Vector3::new(0.0, 0.3, 0.7), 1e-12).is_some());
        assert!(loc.locate(&m, &Vector3::new(1.2, 0.3, 0.7), 1e-12).is_none());
    }
}
