//! Integration over elements and boundary triangles.
//!
//! `integrate_volume` and `integrate_surface` use the centroid rule, exact for
//! affine integrands. The degree-two rules below are used where a product of
//! two affine factors has to be integrated exactly (loads against P1 fields,
//! mass matrices).

use nalgebra::Vector3;

use super::mesh::{BoxFace, Mesh};
use crate::error::{LabError, Result};

/// Integrand for [`integrate_volume`].
#[derive(Debug, Clone, Copy)]
pub enum VolumeIntegrand<'a> {
    PerElement(&'a [f64]),
    Nodal(&'a [f64]),
}

/// Selection of boundary triangles.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    All,
    Face(BoxFace),
    Triangles(Vec<usize>),
}

impl Region {
    pub fn parse(name: &str) -> Option<Region> {
        if name == "all" {
            Some(Region::All)
        } else {
            BoxFace::parse(name).map(Region::Face)
        }
    }

    /// Indices into `mesh.boundary_tris()`.
    pub fn triangles(&self, mesh: &Mesh) -> Result<Vec<usize>> {
        match self {
            Region::All => Ok((0..mesh.boundary_tris().len()).collect()),
            Region::Face(face) => {
                let tris = mesh.face_triangles(*face);
                if tris.is_empty() {
                    return Err(LabError::NotOnBoundary(format!("no boundary triangle on face {}", face.name())));
                }
                Ok(tris)
            }
            Region::Triangles(list) => {
                if let Some(bad) = list.iter().find(|&&i| i >= mesh.boundary_tris().len()) {
                    return Err(LabError::NotOnBoundary(format!("boundary triangle {bad} does not exist")));
                }
                Ok(list.clone())
            }
        }
    }
}

pub fn integrate_volume(mesh: &Mesh, integrand: VolumeIntegrand<'_>) -> Result<f64> {
    let vols = mesh.element_volumes();
    match integrand {
        VolumeIntegrand::PerElement(values) => {
            mesh.check_elemental(values.len())?;
            Ok(vols.iter().zip(values).map(|(v, f)| v * f).sum())
        }
        VolumeIntegrand::Nodal(values) => {
            mesh.check_nodal(values.len())?;
            Ok(mesh.tets().iter().zip(vols).map(|(t, v)| v * t.iter().map(|&i| values[i]).sum::<f64>() / 4.0).sum())
        }
    }
}

pub fn integrate_surface(mesh: &Mesh, integrand: &[f64], region: &Region) -> Result<f64> {
    mesh.check_nodal(integrand.len())?;
    let tris = region.triangles(mesh)?;
    Ok(tris
        .iter()
        .map(|&i| {
            let tri = &mesh.boundary_tris()[i];
            tri.area() * tri.nodes.iter().map(|&n| integrand[n]).sum::<f64>() / 3.0
        })
        .sum())
}

const TET_A: f64 = 0.585_410_196_624_968_5;
const TET_B: f64 = 0.138_196_601_125_010_5;

/// Four-point rule on a tet (barycentric weights, quadrature weight), exact to degree two.
pub const TET_DEGREE2: [([f64; 4], f64); 4] = [
    ([TET_A, TET_B, TET_B, TET_B], 0.25),
    ([TET_B, TET_A, TET_B, TET_B], 0.25),
    ([TET_B, TET_B, TET_A, TET_B], 0.25),
    ([TET_B, TET_B, TET_B, TET_A], 0.25),
];

/// Three-point rule on a triangle, exact to degree two.
pub const TRI_DEGREE2: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

/// `∫ v²` for a nodal scalar P1 field (exact element mass matrices).
pub fn nodal_l2_squared(mesh: &Mesh, values: &[f64]) -> Result<f64> {
    mesh.check_nodal(values.len())?;
    Ok(mesh
        .tets()
        .iter()
        .zip(mesh.element_volumes())
        .map(|(t, vol)| {
            let sq: f64 = t.iter().map(|&i| values[i] * values[i]).sum();
            let s: f64 = t.iter().map(|&i| values[i]).sum();
            vol / 20.0 * (sq + s * s)
        })
        .sum())
}

/// `‖v‖_{L²}` of a nodal vector field.
pub fn l2_norm(mesh: &Mesh, field: &[Vector3<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for c in 0..3 {
        let comp: Vec<f64> = field.iter().map(|v| v[c]).collect();
        total += nodal_l2_squared(mesh, &comp)?;
    }
    Ok(total.sqrt())
}

/// `‖v‖_{H¹} = (‖v‖²_{L²} + ‖∇v‖²_{L²})^{1/2}` of a nodal vector field.
pub fn h1_norm(mesh: &Mesh, field: &[Vector3<f64>]) -> Result<f64> {
    let l2 = l2_norm(mesh, field)?;
    let grad: f64 = mesh.gradients(field)?.iter().zip(mesh.element_volumes()).map(|(g, v)| v * g.norm_squared()).sum();
    Ok((l2 * l2 + grad).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::build_unit_cube_mesh;

    #[test]
    fn volume_integrals() {
        let m = build_unit_cube_mesh(2).unwrap();
        let ones = vec![1.0; m.num_nodes()];
        assert!((integrate_volume(&m, VolumeIntegrand::Nodal(&ones)).unwrap() - 1.0).abs() < 1e-14);
        let x3: Vec<f64> = m.nodes().iter().map(|p| p.z).collect();
        assert!((integrate_volume(&m, VolumeIntegrand::Nodal(&x3)).unwrap() - 0.5).abs() < 1e-14);
        let zeros = vec![0.0; m.num_elements()];
        assert_eq!(integrate_volume(&m, VolumeIntegrand::PerElement(&zeros)).unwrap(), 0.0);
        assert!(integrate_volume(&m, VolumeIntegrand::Nodal(&zeros)).is_err());
    }

    #[test]
    fn refined_quadrature_agrees_on_x3() {
        // Oracle: the same integral on a much finer mesh.
        let fine = build_unit_cube_mesh(6).unwrap();
        let x3: Vec<f64> = fine.nodes().iter().map(|p| p.z).collect();
        assert!((integrate_volume(&fine, VolumeIntegrand::Nodal(&x3)).unwrap() - 0.5).abs() < 1e-13);
    }

    #[test]
    fn surface_integrals() {
        let m = build_unit_cube_mesh(2).unwrap();
        let ones = vec![1.0; m.num_nodes()];
        assert!((integrate_surface(&m, &ones, &Region::All).unwrap() - 6.0).abs() < 1e-13);
        let x3: Vec<f64> = m.nodes().iter().map(|p| p.z).collect();
        assert!((integrate_surface(&m, &x3, &Region::Face(BoxFace::Top)).unwrap() - 1.0).abs() < 1e-14);
        let x1: Vec<f64> = m.nodes().iter().map(|p| p.x).collect();
        assert!((integrate_surface(&m, &x1, &Region::Face(BoxFace::Bottom)).unwrap() - 0.5).abs() < 1e-14);
        assert!(integrate_surface(&m, &x1, &Region::Triangles(vec![10_000])).is_err());
    }

    #[test]
    fn mass_matrix_is_exact_for_quadratics() {
        let m = build_unit_cube_mesh(1).unwrap();
        let x1: Vec<f64> = m.nodes().iter().map(|p| p.x).collect();
        assert!((nodal_l2_squared(&m, &x1).unwrap() - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn degree_two_rules_integrate_quadratics() {
        // ∫_T λ0 λ1 = |T| / 20 on the reference tet.
        let s: f64 = TET_DEGREE2.iter().map(|(b, w)| w * b[0] * b[1]).sum();
        assert!((s - 1.0 / 20.0).abs() < 1e-15);
        let s: f64 = TET_DEGREE2.iter().map(|(b, w)| w * b[2] * b[2]).sum();
        assert!((s - 1.0 / 10.0).abs() < 1e-15);
        let s: f64 = TRI_DEGREE2.iter().map(|(b, w)| w * b[0] * b[1]).sum();
        assert!((s - 1.0 / 12.0).abs() < 1e-15);
    }
}
