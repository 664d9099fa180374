//! Element operators shared by the quadratic and nonlinear problems.
//!
//! Nodal unknowns are laid out as `3·node + component`.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix3x4, SMatrix, Vector3};

use crate::geometry::Mesh;
use crate::material::yeoh::Mat9;

pub(crate) type Mat6x12 = SMatrix<f64, 6, 12>;
pub(crate) type Mat12 = SMatrix<f64, 12, 12>;
pub(crate) type Vec12 = SMatrix<f64, 12, 1>;

pub(crate) fn to_vector(field: &[Vector3<f64>]) -> DVector<f64> {
    DVector::from_iterator(3 * field.len(), field.iter().flat_map(|v| v.iter().copied()))
}

pub(crate) fn to_field(x: &DVector<f64>, nodes: usize) -> Vec<Vector3<f64>> {
    (0..nodes).map(|a| Vector3::new(x[3 * a], x[3 * a + 1], x[3 * a + 2])).collect()
}

pub(crate) fn local_dofs(tet: &[usize; 4]) -> [usize; 12] {
    let mut d = [0; 12];
    for (a, &n) in tet.iter().enumerate() {
        for i in 0..3 {
            d[3 * a + i] = 3 * n + i;
        }
    }
    d
}

/// Mandel vector of `sym ∇u` as a linear map of the twelve local unknowns.
pub(crate) fn strain_operator(g: &Matrix3x4<f64>) -> Mat6x12 {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut b = Mat6x12::zeros();
    for a in 0..4 {
        let (c0, c1, c2) = (3 * a, 3 * a + 1, 3 * a + 2);
        b[(0, c0)] = g[(0, a)];
        b[(1, c1)] = g[(1, a)];
        b[(2, c2)] = g[(2, a)];
        b[(3, c1)] = r * g[(2, a)];
        b[(3, c2)] = r * g[(1, a)];
        b[(4, c0)] = r * g[(2, a)];
        b[(4, c2)] = r * g[(0, a)];
        b[(5, c0)] = r * g[(1, a)];
        b[(5, c1)] = r * g[(0, a)];
    }
    b
}

/// `div u` on one element as a row acting on the local unknowns.
pub(crate) fn divergence_row(g: &Matrix3x4<f64>) -> Vec12 {
    let mut d = Vec12::zeros();
    for a in 0..4 {
        for i in 0..3 {
            d[3 * a + i] = g[(i, a)];
        }
    }
    d
}

/// Pulls `∂/∂F` (a 3×3 matrix) back to the local unknowns through `∂F_ij/∂u_{a,k} = δ_ik G_ja`.
pub(crate) fn pull_back_gradient(p: &Matrix3<f64>, g: &Matrix3x4<f64>) -> Vec12 {
    let pg = p * g;
    let mut out = Vec12::zeros();
    for a in 0..4 {
        for i in 0..3 {
            out[3 * a + i] = pg[(i, a)];
        }
    }
    out
}

/// Pulls a Hessian in flattened `F` (row-major, index `3i + j`) back to the local unknowns.
pub(crate) fn pull_back_hessian(h9: &Mat9, g: &Matrix3x4<f64>) -> Mat12 {
    let mut j = SMatrix::<f64, 9, 12>::zeros();
    for a in 0..4 {
        for i in 0..3 {
            for jj in 0..3 {
                j[(3 * i + jj, 3 * a + i)] = g[(jj, a)];
            }
        }
    }
    j.transpose() * h9 * j
}

pub(crate) fn scatter_matrix(global: &mut DMatrix<f64>, dofs: &[usize; 12], local: &Mat12) {
    for (p, &gp) in dofs.iter().enumerate() {
        for (q, &gq) in dofs.iter().enumerate() {
            global[(gp, gq)] += local[(p, q)];
        }
    }
}

pub(crate) fn scatter_vector(global: &mut DVector<f64>, dofs: &[usize; 12], local: &Vec12) {
    for (p, &gp) in dofs.iter().enumerate() {
        global[gp] += local[p];
    }
}

pub(crate) fn gather(x: &DVector<f64>, dofs: &[usize; 12]) -> Vec12 {
    Vec12::from_fn(|p, _| x[dofs[p]])
}

/// Per-element divergence of a nodal vector.
pub(crate) fn element_divergences(mesh: &Mesh, x: &DVector<f64>) -> Vec<f64> {
    mesh.tets()
        .iter()
        .zip(mesh.gradient_maps())
        .map(|(t, g)| divergence_row(g).dot(&gather(x, &local_dofs(t))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_unit_cube_mesh;
    use crate::material::to_mandel;

    #[test]
    fn operators_match_field_gradients() {
        let mesh = build_unit_cube_mesh(1).unwrap();
        let a = Matrix3::new(0.3, -1.0, 2.0, 0.5, 0.1, -0.7, 1.1, 0.4, -0.2);
        let field: Vec<Vector3<f64>> = mesh.nodes().iter().map(|x| a * x + Vector3::new(1.0, 2.0, 3.0)).collect();
        let x = to_vector(&field);
        for (t, g) in mesh.tets().iter().zip(mesh.gradient_maps()) {
            let local = gather(&x, &local_dofs(t));
            let e = strain_operator(g) * local;
            assert!((e - to_mandel(&a)).norm() < 1e-12);
            assert!((divergence_row(g).dot(&local) - a.trace()).abs() < 1e-12);
            let p = Matrix3::new(1.0, 2.0, 0.0, -1.0, 0.5, 3.0, 0.2, 0.0, 1.0);
            // ⟨P, ∇u⟩ equals the pulled-back gradient applied to the unknowns.
            assert!((pull_back_gradient(&p, g).dot(&local) - p.component_mul(&a).sum()).abs() < 1e-12);
        }
        assert_eq!(to_field(&x, mesh.num_nodes()), field);
    }
}
