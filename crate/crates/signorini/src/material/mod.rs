//! Yeoh stored energy, its incompressible variant, and the linearized forms.
//!
//! Symmetric tensors are stored in Mandel layout: components ordered
//! `(11, 22, 33, 23, 13, 12)` with the off-diagonal entries scaled by `√2`,
//! so that `A : B = mandel(A) · mandel(B)` and a fourth-order tensor acting on
//! symmetric arguments is an ordinary symmetric 6×6 matrix. Every quadratic
//! form in the crate goes through [`to_mandel`].

mod expansion;
pub mod yeoh;

use nalgebra::{Matrix3, Matrix6, Vector6};

pub use expansion::{
    coercivity_constant, distance_to_so3, taylor_probe_gradient, verify_taylor_remainder, TaylorRow, TaylorTable,
    TAYLOR_STEPS,
};

use crate::error::{LabError, Result};

/// Tolerance on `|det F − 1|` for the strict incompressible energy.
pub const DET_TOLERANCE: f64 = 1e-9;
/// Tolerance on `|tr E|` for the incompressible quadratic form.
pub const TRACE_TOLERANCE: f64 = 1e-9;

/// A value that exists only on the constraint set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constrained {
    Value(f64),
    Infeasible { residual: f64 },
}

impl Constrained {
    pub fn value(self) -> Option<f64> {
        match self {
            Constrained::Value(v) => Some(v),
            Constrained::Infeasible { .. } => None,
        }
    }

    pub fn is_feasible(self) -> bool {
        matches!(self, Constrained::Value(_))
    }

    pub fn into_result(self) -> Result<f64> {
        match self {
            Constrained::Value(v) => Ok(v),
            Constrained::Infeasible { residual } => Err(LabError::Infeasible { residual }),
        }
    }
}

/// How the constraint `det F = 1` is imposed when evaluating energies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyMode {
    Strict,
    Penalized,
}

/// Symmetric strain `E = sym ∇u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrainTensor {
    matrix: Matrix3<f64>,
    trace: f64,
}

impl StrainTensor {
    /// Symmetric part of an arbitrary gradient.
    pub fn sym(grad: &Matrix3<f64>) -> StrainTensor {
        let matrix = (grad + grad.transpose()) * 0.5;
        StrainTensor { trace: matrix.trace(), matrix }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn mandel(&self) -> Vector6<f64> {
        to_mandel(&self.matrix)
    }
}

/// Mandel vector of the symmetric part of `m`.
pub fn to_mandel(m: &Matrix3<f64>) -> Vector6<f64> {
    let r = std::f64::consts::SQRT_2 * 0.5;
    Vector6::new(
        m[(0, 0)],
        m[(1, 1)],
        m[(2, 2)],
        r * (m[(1, 2)] + m[(2, 1)]),
        r * (m[(0, 2)] + m[(2, 0)]),
        r * (m[(0, 1)] + m[(1, 0)]),
    )
}

pub fn from_mandel(v: &Vector6<f64>) -> Matrix3<f64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    Matrix3::new(v[0], r * v[5], r * v[4], r * v[5], v[1], r * v[3], r * v[4], r * v[3], v[2])
}

/// Homogeneous Yeoh material.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialModel {
    c: [f64; 3],
    penalty_kappa: f64,
    elastic_tensor: Matrix6<f64>,
    constrained_tensor: Matrix6<f64>,
}

fn trace_free_probes() -> [Matrix3<f64>; 5] {
    [
        Matrix3::new(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0),
        Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -2.0),
        Matrix3::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0),
        Matrix3::new(0.3, -0.7, 0.2, -0.7, 0.5, 0.9, 0.2, 0.9, -0.8),
    ]
}

impl MaterialModel {
    /// Yeoh material with `c1 > 0`, `c2, c3 ≥ 0`, and penalty weight `100 c1`.
    pub fn yeoh(c1: f64, c2: f64, c3: f64) -> Result<MaterialModel> {
        if !(c1 > 0.0) || !(c2 >= 0.0) || !(c3 >= 0.0) || ![c1, c2, c3].iter().all(|c| c.is_finite()) {
            return Err(LabError::InvalidInput(format!(
                "Yeoh coefficients need c1 > 0 and c2, c3 >= 0 (got {c1}, {c2}, {c3})"
            )));
        }
        let m = Matrix6::<f64>::from_fn(|i, j| if i < 3 && j < 3 { 1.0 } else { 0.0 });
        let elastic_tensor = Matrix6::identity() * (2.0 * c1) + m * (8.0 * c2);
        let constrained_tensor = Matrix6::identity() * (4.0 * c1) + m * (8.0 * c2 - 2.0 * c1);
        let model = MaterialModel { c: [c1, c2, c3], penalty_kappa: 100.0 * c1, elastic_tensor, constrained_tensor };
        model.check_tensor_against_finite_differences()?;
        Ok(model)
    }

    pub fn with_penalty(mut self, kappa: f64) -> Result<MaterialModel> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(LabError::InvalidInput(format!("penalty weight must be positive, got {kappa}")));
        }
        self.penalty_kappa = kappa;
        Ok(self)
    }

    pub fn coefficients(&self) -> [f64; 3] {
        self.c
    }

    pub fn c1(&self) -> f64 {
        self.c[0]
    }

    pub fn penalty_kappa(&self) -> f64 {
        self.penalty_kappa
    }

    /// `ℂ = D²W(I)` in Mandel layout: `2 c1 I + 8 c2 (1 ⊗ 1)`.
    pub fn elastic_tensor(&self) -> &Matrix6<f64> {
        &self.elastic_tensor
    }

    /// Second variation of `W` along the manifold `det F = 1` at `I`:
    /// `D²W(I) − 2 c1 D²det(I)`, the Lagrange term coming from `DW(I) = 2 c1 I`.
    /// On trace-free symmetric arguments it equals `4 c1 |E|²`.
    pub fn constrained_tensor(&self) -> &Matrix6<f64> {
        &self.constrained_tensor
    }

    /// `½ D²W(I)[H, H]` for symmetric `H`.
    pub fn half_elastic_form(&self, h: &Matrix3<f64>) -> f64 {
        let v = to_mandel(h);
        0.5 * v.dot(&(self.elastic_tensor * v))
    }

    /// `½ E : ℂ^I : E` on the deviatoric part of `E`; equals `Q^I(E)` when
    /// `tr E = 0` and stays convex off the constraint, which solvers need.
    pub fn deviatoric_form(&self, e: &Matrix3<f64>) -> f64 {
        let v = to_mandel(&deviator(e));
        0.5 * v.dot(&(self.constrained_tensor * v))
    }

    /// Mandel matrix of [`Self::deviatoric_form`]: `½ vᵀ D v`.
    pub fn deviatoric_matrix(&self) -> Matrix6<f64> {
        let p = Matrix6::identity() - Matrix6::from_fn(|i, j| if i < 3 && j < 3 { 1.0 / 3.0 } else { 0.0 });
        p * self.constrained_tensor * p
    }

    fn check_tensor_against_finite_differences(&self) -> Result<()> {
        let step = 1e-4;
        for h in trace_free_probes() {
            let w = |t: f64| yeoh_energy(&(Matrix3::identity() + h * t), self);
            let fd = (w(step) - 2.0 * w(0.0) + w(-step)) / (step * step);
            let analytic = 2.0 * self.half_elastic_form(&h);
            if (fd - analytic).abs() > 1e-5 * analytic.abs() {
                return Err(LabError::MaterialDefect(format!(
                    "elastic tensor disagrees with finite differences: {analytic} vs {fd}"
                )));
            }
        }
        Ok(())
    }
}

pub fn deviator(e: &Matrix3<f64>) -> Matrix3<f64> {
    e - Matrix3::identity() * (e.trace() / 3.0)
}

pub fn yeoh_energy(f: &Matrix3<f64>, m: &MaterialModel) -> f64 {
    yeoh::energy(&m.c, f)
}

pub fn incompressible_energy(f: &Matrix3<f64>, m: &MaterialModel, mode: EnergyMode) -> Constrained {
    let residual = f.determinant() - 1.0;
    match mode {
        EnergyMode::Strict if residual.abs() > DET_TOLERANCE => Constrained::Infeasible { residual },
        EnergyMode::Strict => Constrained::Value(yeoh_energy(f, m)),
        EnergyMode::Penalized => Constrained::Value(yeoh_energy(f, m) + m.penalty_kappa * residual * residual),
    }
}

pub fn elastic_tensor(m: &MaterialModel) -> Matrix6<f64> {
    m.elastic_tensor
}

/// `Q^I(E)`: the limit of `h^{-2} W(F_h)` along unit-determinant paths
/// `F_h = I + hH + O(h²)` with `sym H = E`, infinite unless `tr E = 0`.
pub fn quadratic_form_qi(e: &StrainTensor, m: &MaterialModel) -> Constrained {
    if e.trace().abs() > TRACE_TOLERANCE {
        return Constrained::Infeasible { residual: e.trace() };
    }
    let v = e.mandel();
    Constrained::Value(0.5 * v.dot(&(m.constrained_tensor * v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        let axis =
            nalgebra::Vector3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        *nalgebra::Rotation3::from_scaled_axis(axis.normalize() * rng.random_range(0.0..3.1)).matrix()
    }

    #[test]
    fn yeoh_values() {
        let m = MaterialModel::yeoh(1.0, 1.0, 1.0).unwrap();
        assert_eq!(yeoh_energy(&Matrix3::identity(), &m), 0.0);
        let f = Matrix3::from_diagonal(&nalgebra::Vector3::new(2.0, 1.0, 0.5));
        // g = 4 + 1 + 0.25 - 3 = 2.25
        let g: f64 = 2.25;
        assert!((yeoh_energy(&f, &m) - (g + g * g + g * g * g)).abs() < 1e-12);
        assert!((yeoh_energy(&f, &m) - 18.703125).abs() < 1e-12);
    }

    #[test]
    fn frame_indifference() {
        let m = MaterialModel::yeoh(1.0, 0.2, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let r = random_rotation(&mut rng);
            let f = Matrix3::from_fn(|_, _| rng.random_range(-1.5..1.5));
            let (a, b) = (yeoh_energy(&f, &m), yeoh_energy(&(r * f), &m));
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn nonnegative_on_unit_determinant() {
        let m = MaterialModel::yeoh(1.0, 0.2, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let mut f = Matrix3::<f64>::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let d = f.determinant();
            if d.abs() < 1e-3 {
                continue;
            }
            if d < 0.0 {
                f.set_column(0, &(-f.column(0)));
            }
            let f = f / f.determinant().cbrt();
            assert!(yeoh_energy(&f, &m) >= -1e-12);
        }
    }

    #[test]
    fn incompressible_modes() {
        let m = MaterialModel::yeoh(1.0, 1.0, 1.0).unwrap().with_penalty(10.0).unwrap();
        let id = Matrix3::identity();
        assert_eq!(incompressible_energy(&id, &m, EnergyMode::Strict), Constrained::Value(0.0));
        assert_eq!(incompressible_energy(&id, &m, EnergyMode::Penalized), Constrained::Value(0.0));
        let stretch = Matrix3::from_diagonal(&nalgebra::Vector3::new(2.0, 1.0, 1.0));
        assert!(!incompressible_energy(&stretch, &m, EnergyMode::Strict).is_feasible());
        let iso = Matrix3::from_diagonal(&nalgebra::Vector3::new(2.0, 1.0, 0.5));
        let v = incompressible_energy(&iso, &m, EnergyMode::Penalized).value().unwrap();
        assert!((v - 18.703125).abs() < 1e-12);
    }

    #[test]
    fn elastic_tensor_examples() {
        let m = MaterialModel::yeoh(1.0, 0.2, 0.1).unwrap();
        let h = Matrix3::new(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!((m.half_elastic_form(&h) - 2.0).abs() < 1e-14);
        // Off the incompressible directions: ½(2 c1 |I|² + 8 c2 (tr I)²) = 3 c1 + 36 c2.
        assert!((m.half_elastic_form(&Matrix3::identity()) - (3.0 + 36.0 * 0.2)).abs() < 1e-13);
        let neo = MaterialModel::yeoh(1.5, 0.0, 0.0).unwrap();
        let h = Matrix3::new(0.2, 0.1, -0.4, 0.1, 0.5, 0.3, -0.4, 0.3, -0.7);
        assert!((neo.half_elastic_form(&h) - 1.5 * h.norm_squared()).abs() < 1e-13);
    }

    #[test]
    fn elastic_tensor_matches_second_differences() {
        let m = MaterialModel::yeoh(1.0, 0.2, 0.1).unwrap();
        for h in trace_free_probes() {
            let step = 1e-4;
            let w = |t: f64| yeoh_energy(&(Matrix3::identity() + h * t), &m);
            let fd = (w(step) - 2.0 * w(0.0) + w(-step)) / (step * step);
            let analytic = 2.0 * m.half_elastic_form(&h);
            assert!((fd - analytic).abs() <= 1e-5 * analytic);
        }
    }

    #[test]
    fn qi_values() {
        let m = MaterialModel::yeoh(1.0, 0.2, 0.1).unwrap();
        assert_eq!(quadratic_form_qi(&StrainTensor::sym(&Matrix3::zeros()), &m), Constrained::Value(0.0));
        assert!(!quadratic_form_qi(&StrainTensor::sym(&Matrix3::identity()), &m).is_feasible());
    }

    #[test]
    fn qi_equals_limit_along_incompressible_path() {
        // Oracle: h^{-2} W along F_h = exp-like unit-determinant path with sym H = E.
        let m = MaterialModel::yeoh(1.0, 0.2, 0.1).unwrap();
        let mut g = Matrix3::zeros();
        g[(0, 2)] = 1.0;
        let e = StrainTensor::sym(&g);
        let q = quadratic_form_qi(&e, &m).value().unwrap();
        let h: f64 = 1e-4;
        let f = Matrix3::identity() + e.matrix() * h;
        let f = f / f.determinant().cbrt();
        let oracle = yeoh_energy(&f, &m) / (h * h);
        assert!((q - oracle).abs() < 1e-3, "{q} vs {oracle}");
        assert!((q - 2.0 * m.c1() * e.matrix().norm_squared()).abs() < 1e-14);
    }

    #[test]
    fn mandel_round_trip_and_inner_product() {
        let a = Matrix3::new(1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0);
        let b = Matrix3::new(-1.0, 0.5, 0.0, 0.5, 2.0, -3.0, 0.0, -3.0, 1.0);
        assert!((from_mandel(&to_mandel(&a)) - a).norm() < 1e-14);
        assert!((to_mandel(&a).dot(&to_mandel(&b)) - a.component_mul(&b).sum()).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert!(MaterialModel::yeoh(0.0, 1.0, 1.0).is_err());
        assert!(MaterialModel::yeoh(1.0, -1.0, 1.0).is_err());
        assert!(MaterialModel::yeoh(1.0, 0.0, 0.0).unwrap().with_penalty(-1.0).is_err());
    }
}
