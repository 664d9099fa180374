//! Deformations and displacements on the mesh, optimal rotations, and the
//! rescaled displacement extracted from a deformation.

mod io;

use nalgebra::{Matrix3, Vector3};

pub use io::{format_field, parse_field, read_field, write_field};

use crate::error::{LabError, Result};
use crate::geometry::{integrate_volume, Mesh, ObstacleSet, VolumeIntegrand};
use crate::loads::Rotation;
use crate::material::StrainTensor;

/// Nodal deformation `y` with its per-element gradients and determinants.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationField {
    nodal: Vec<Vector3<f64>>,
    gradients: Vec<Matrix3<f64>>,
    determinants: Vec<f64>,
}

impl DeformationField {
    pub fn new(mesh: &Mesh, nodal: Vec<Vector3<f64>>) -> Result<DeformationField> {
        let gradients = mesh.gradients(&nodal)?;
        let determinants = gradients.iter().map(|g| g.determinant()).collect();
        Ok(DeformationField { nodal, gradients, determinants })
    }

    pub fn identity(mesh: &Mesh) -> DeformationField {
        DeformationField::new(mesh, mesh.nodes().to_vec()).expect("sized to mesh")
    }

    pub fn nodal(&self) -> &[Vector3<f64>] {
        &self.nodal
    }

    pub fn gradients(&self) -> &[Matrix3<f64>] {
        &self.gradients
    }

    pub fn determinants(&self) -> &[f64] {
        &self.determinants
    }

    pub fn max_det_residual(&self) -> f64 {
        self.determinants.iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Nodal displacement `u` with gradients, strains and divergences per element.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    nodal: Vec<Vector3<f64>>,
    gradients: Vec<Matrix3<f64>>,
    strains: Vec<StrainTensor>,
    divergence: Vec<f64>,
}

impl DisplacementField {
    pub fn new(mesh: &Mesh, nodal: Vec<Vector3<f64>>) -> Result<DisplacementField> {
        let gradients = mesh.gradients(&nodal)?;
        let strains: Vec<StrainTensor> = gradients.iter().map(StrainTensor::sym).collect();
        let divergence = strains.iter().map(|e| e.trace()).collect();
        Ok(DisplacementField { nodal, gradients, strains, divergence })
    }

    pub fn zeros(mesh: &Mesh) -> DisplacementField {
        DisplacementField::new(mesh, vec![Vector3::zeros(); mesh.num_nodes()]).expect("sized to mesh")
    }

    /// Nodal interpolant of `x ↦ f(x)`.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(&Vector3<f64>) -> Vector3<f64>) -> DisplacementField {
        DisplacementField::new(mesh, mesh.nodes().iter().map(f).collect()).expect("sized to mesh")
    }

    pub fn nodal(&self) -> &[Vector3<f64>] {
        &self.nodal
    }

    pub fn into_nodal(self) -> Vec<Vector3<f64>> {
        self.nodal
    }

    pub fn gradients(&self) -> &[Matrix3<f64>] {
        &self.gradients
    }

    pub fn strains(&self) -> &[StrainTensor] {
        &self.strains
    }

    pub fn divergence(&self) -> &[f64] {
        &self.divergence
    }

    pub fn max_abs_divergence(&self) -> f64 {
        self.divergence.iter().map(|d| d.abs()).fold(0.0, f64::max)
    }
}

/// Result of [`optimal_rotation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationFit {
    pub rotation: Rotation,
    /// Singular values of `A = ∫ ∇y`, descending.
    pub singular_values: Vector3<f64>,
    /// `σ₂ ≈ σ₃ ≈ 0`: the minimizer is not unique and one of them was returned.
    pub degenerate: bool,
}

/// Rotation closest to `∇y` in `L²`: the polar factor of `A = ∫_Ω ∇y`,
/// with the sign of the last singular direction fixed so that `det R = 1`.
pub fn optimal_rotation(y: &DeformationField, mesh: &Mesh) -> RotationFit {
    let a: Matrix3<f64> = y.gradients().iter().zip(mesh.element_volumes()).map(|(g, v)| g * *v).sum();
    polar_rotation(&a)
}

/// Maximizer of `tr(Rᵀ A)` over `SO(3)`.
pub fn polar_rotation(a: &Matrix3<f64>) -> RotationFit {
    let svd = a.svd(true, true);
    let mut u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let mut s = svd.singular_values;
    // Sort descending (nalgebra does not guarantee order).
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let u_sorted = Matrix3::from_columns(&[u.column(order[0]), u.column(order[1]), u.column(order[2])]);
    let vt_sorted = Matrix3::from_rows(&[v_t.row(order[0]), v_t.row(order[1]), v_t.row(order[2])]);
    s = Vector3::new(s[order[0]], s[order[1]], s[order[2]]);
    u = u_sorted;
    if (u * vt_sorted).determinant() < 0.0 {
        let flipped = -u.column(2);
        u.set_column(2, &flipped);
    }
    let scale = s[0].max(f64::MIN_POSITIVE);
    let degenerate = s[1] <= 1e-12 * scale;
    RotationFit { rotation: Rotation::from_matrix_unchecked(u * vt_sorted), singular_values: s, degenerate }
}

/// Translations `c_α = |Ω|^{-1} ∫ (y − R x)_α` and `c₃ = −min_E (R x)₃`.
pub fn translations(y: &DeformationField, r: &Rotation, e: &ObstacleSet, mesh: &Mesh) -> Result<Vector3<f64>> {
    mesh.check_nodal(y.nodal().len())?;
    if e.hull_vertices_2d.is_empty() {
        return Err(LabError::ObstacleHypothesis);
    }
    let volume = mesh.volume();
    let mut c = Vector3::zeros();
    for alpha in 0..2 {
        let values: Vec<f64> =
            y.nodal().iter().zip(mesh.nodes()).map(|(yi, x)| yi[alpha] - (r.matrix() * x)[alpha]).collect();
        c[alpha] = integrate_volume(mesh, VolumeIntegrand::Nodal(&values))? / volume;
    }
    c.z = -e.min_rotated_height(r.matrix());
    Ok(c)
}

/// `u = h^{-1} Rᵀ {(y − c − R x)_α e_α + (y₃ − x₃) e₃}`, applied nodewise.
pub fn extract_displacement(
    y: &DeformationField,
    r: &Rotation,
    c: &Vector3<f64>,
    h: f64,
    mesh: &Mesh,
) -> Result<DisplacementField> {
    if !(h > 0.0) {
        return Err(LabError::InvalidInput(format!("h must be positive, got {h}")));
    }
    mesh.check_nodal(y.nodal().len())?;
    let rt = r.matrix().transpose();
    let nodal = y
        .nodal()
        .iter()
        .zip(mesh.nodes())
        .map(|(yi, x)| {
            let horizontal = yi - c - r.matrix() * x;
            let w = Vector3::new(horizontal.x, horizontal.y, yi.z - x.z);
            rt * w / h
        })
        .collect();
    DisplacementField::new(mesh, nodal)
}

/// Inverse of [`extract_displacement`].
pub fn rebuild_deformation(
    u: &DisplacementField,
    r: &Rotation,
    c: &Vector3<f64>,
    h: f64,
    mesh: &Mesh,
) -> Result<DeformationField> {
    mesh.check_nodal(u.nodal().len())?;
    let nodal = u
        .nodal()
        .iter()
        .zip(mesh.nodes())
        .map(|(ui, x)| {
            let w = r.matrix() * ui * h;
            let rx = r.matrix() * x;
            Vector3::new(w.x + c.x + rx.x, w.y + c.y + rx.y, w.z + x.z)
        })
        .collect();
    DeformationField::new(mesh, nodal)
}

/// Per-element residual of
/// `det(I + hG) = 1 + h tr G − ½h² (tr(G²) − (tr G)²) + h³ det G`.
pub fn determinant_expansion_check(u: &DisplacementField, h: f64) -> Vec<f64> {
    u.gradients()
        .iter()
        .map(|g| {
            let lhs = (Matrix3::identity() + g * h).determinant();
            let tr = g.trace();
            let rhs = 1.0 + h * tr - 0.5 * h * h * ((g * g).trace() - tr * tr) + h.powi(3) * g.determinant();
            (lhs - rhs).abs()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_unit_cube_mesh, extract_obstacle};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mesh() -> Mesh {
        build_unit_cube_mesh(2).unwrap()
    }

    fn deform(m: &Mesh, f: impl FnMut(&Vector3<f64>) -> Vector3<f64>) -> DeformationField {
        DeformationField::new(m, m.nodes().iter().map(f).collect()).unwrap()
    }

    fn energy_to(y: &DeformationField, m: &Mesh, r: &Matrix3<f64>) -> f64 {
        y.gradients().iter().zip(m.element_volumes()).map(|(g, v)| v * (g - r).norm_squared()).sum()
    }

    #[test]
    fn rigid_gradient_is_recovered() {
        let m = mesh();
        let r0 = Rotation::from_axis_angle(&Vector3::new(1.0, 2.0, -1.0), 0.9).unwrap();
        let y = deform(&m, |x| r0.matrix() * x + Vector3::new(0.1, 0.2, 0.3));
        let fit = optimal_rotation(&y, &m);
        assert!((fit.rotation.matrix() - r0.matrix()).norm() < 1e-12);
        assert!(!fit.degenerate);
    }

    #[test]
    fn small_skew_gives_rotation_about_e3() {
        let m = mesh();
        let g = Matrix3::new(1.0, 0.01, 0.0, -0.01, 1.0, 0.0, 0.0, 0.0, 1.0);
        let y = deform(&m, |x| g * x);
        let fit = optimal_rotation(&y, &m);
        let (axis, angle) = fit.rotation.axis_angle();
        assert!((angle - 0.01f64.atan()).abs() < 1e-12);
        assert!((axis.z.abs() - 1.0).abs() < 1e-12);
        // Brute-force comparison over angles about e3.
        let best = (0..20001)
            .map(|k| -0.02 + 0.04 * k as f64 / 20000.0)
            .map(|t| energy_to(&y, &m, Rotation::about_e3(t).matrix()))
            .fold(f64::INFINITY, f64::min);
        assert!(energy_to(&y, &m, fit.rotation.matrix()) <= best + 1e-14);
    }

    #[test]
    fn equivariance_under_left_rotation() {
        let m = mesh();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let y = deform(&m, |x| x + Vector3::from_fn(|_, _| 0.1 * rng.random_range(-1.0..1.0)));
            let q = Rotation::from_scaled_axis(&Vector3::from_fn(|_, _| rng.random_range(-1.5..1.5)));
            let qy = DeformationField::new(&m, y.nodal().iter().map(|p| q.matrix() * p).collect()).unwrap();
            let r = optimal_rotation(&y, &m).rotation;
            let qr = optimal_rotation(&qy, &m).rotation;
            assert!((qr.matrix() - q.matrix() * r.matrix()).norm() < 1e-10);
        }
    }

    #[test]
    fn degenerate_average_is_flagged() {
        let m = mesh();
        let y = deform(&m, |x| Vector3::new(x.x, 0.0, 0.0));
        assert!(optimal_rotation(&y, &m).degenerate);
    }

    #[test]
    fn translation_examples() {
        let m = mesh();
        let e = extract_obstacle(&m).unwrap();
        let id = Rotation::identity();
        let c = translations(&DeformationField::identity(&m), &id, &e, &m).unwrap();
        assert!(c.norm() < 1e-15);
        let y = deform(&m, |x| x + Vector3::new(1.0, 2.0, 0.0));
        let c = translations(&y, &id, &e, &m).unwrap();
        assert!((c - Vector3::new(1.0, 2.0, 0.0)).norm() < 1e-14);
        // Tilting about e1 lowers the corner (0, 1, 0) when the angle is negative.
        let tilt = Rotation::from_axis_angle(&Vector3::x(), -0.1).unwrap();
        let c = translations(&DeformationField::identity(&m), &tilt, &e, &m).unwrap();
        assert!((c.z - 0.1f64.sin()).abs() < 1e-15);
        let tilt = Rotation::from_axis_angle(&Vector3::x(), 0.1).unwrap();
        let c = translations(&DeformationField::identity(&m), &tilt, &e, &m).unwrap();
        assert!(c.z.abs() < 1e-15);
    }

    #[test]
    fn extraction_examples() {
        let m = mesh();
        let e = extract_obstacle(&m).unwrap();
        let h = 0.1;
        let u = extract_displacement(&DeformationField::identity(&m), &Rotation::identity(), &Vector3::zeros(), h, &m)
            .unwrap();
        assert!(u.nodal().iter().all(|v| v.norm() == 0.0));
        assert!(extract_displacement(
            &DeformationField::identity(&m),
            &Rotation::identity(),
            &Vector3::zeros(),
            0.0,
            &m
        )
        .is_err());

        // y = x + h v with v of zero horizontal mean (affine, so interpolation is exact): u = v.
        let v = |x: &Vector3<f64>| Vector3::new(x.y - 0.5, x.z - x.x, x.x * x.y);
        let y = deform(&m, |x| x + v(x) * h);
        let c = translations(&y, &Rotation::identity(), &e, &m).unwrap();
        let u = extract_displacement(&y, &Rotation::identity(), &c, h, &m).unwrap();
        for (ui, x) in u.nodal().iter().zip(m.nodes()) {
            assert!((ui - v(x)).norm() < 1e-13);
        }

        // Rigid motion about e3: no vertical displacement.
        let r = Rotation::about_e3(0.3);
        let y = deform(&m, |x| r.matrix() * x + Vector3::new(0.2, -0.1, 0.0));
        let c = translations(&y, &r, &e, &m).unwrap();
        let u = extract_displacement(&y, &r, &c, h, &m).unwrap();
        assert!(u.nodal().iter().all(|v| v.z.abs() < 1e-13));
    }

    #[test]
    fn rebuild_inverts_extraction() {
        let m = mesh();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = deform(&m, |x| x + Vector3::from_fn(|_, _| rng.random_range(-0.1..0.1)));
        let r = Rotation::from_scaled_axis(&Vector3::new(0.1, -0.2, 0.3));
        let c = Vector3::new(0.1, 0.2, 0.3);
        let u = extract_displacement(&y, &r, &c, 0.05, &m).unwrap();
        let back = rebuild_deformation(&u, &r, &c, 0.05, &m).unwrap();
        for (a, b) in back.nodal().iter().zip(y.nodal()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn divergence_is_trace_of_gradient() {
        let m = mesh();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = DisplacementField::new(&m, (0..m.num_nodes()).map(|_| Vector3::from_fn(|_, _| rng.random())).collect())
            .unwrap();
        for (d, g) in u.divergence().iter().zip(u.gradients()) {
            assert_eq!(*d, g.trace());
        }
    }

    #[test]
    fn determinant_identity_holds() {
        let m = mesh();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        assert!(determinant_expansion_check(&DisplacementField::zeros(&m), 0.3).iter().all(|r| *r == 0.0));
        let u = DisplacementField::new(&m, (0..m.num_nodes()).map(|_| Vector3::from_fn(|_, _| rng.random())).collect())
            .unwrap();
        assert!(determinant_expansion_check(&u, 0.3).iter().all(|r| *r <= 1e-12));
    }
}
