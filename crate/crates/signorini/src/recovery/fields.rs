use nalgebra::{Matrix3, Vector3};

use crate::error::{LabError, Result};

/// A vector field with its gradient `(∂v_i/∂x_j)`.
pub trait VectorField {
    /// Value and gradient at `x`, or `None` where the field is not defined.
    fn eval(&self, x: &Vector3<f64>) -> Option<(Vector3<f64>, Matrix3<f64>)>;

    /// Box on which the field is defined; `None` means all of space.
    fn domain(&self) -> Option<(Vector3<f64>, Vector3<f64>)> {
        None
    }
}

/// Closed-form divergence-free fields used as oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticField {
    Constant(Vector3<f64>),
    /// `ω ∧ x + c`.
    Rigid {
        omega: Vector3<f64>,
        c: Vector3<f64>,
    },
    /// `A x + b` with `tr A = 0`.
    Affine {
        a: Matrix3<f64>,
        b: Vector3<f64>,
    },
    /// Arnold–Beltrami–Childress flow with wavenumber `k` and phases:
    /// `(A sin(kz+p₃) + C cos(ky+p₂), B sin(kx+p₁) + A cos(kz+p₃), C sin(ky+p₂) + B cos(kx+p₁))`.
    Abc {
        amplitudes: Vector3<f64>,
        k: f64,
        phases: Vector3<f64>,
    },
}

impl AnalyticField {
    pub fn affine(a: Matrix3<f64>, b: Vector3<f64>) -> Result<AnalyticField> {
        if a.trace().abs() > 1e-12 * (1.0 + a.norm()) {
            return Err(LabError::InvalidInput(format!("affine field has divergence {:e}", a.trace())));
        }
        Ok(AnalyticField::Affine { a, b })
    }
}

impl VectorField for AnalyticField {
    fn eval(&self, x: &Vector3<f64>) -> Option<(Vector3<f64>, Matrix3<f64>)> {
        Some(match *self {
            AnalyticField::Constant(c) => (c, Matrix3::zeros()),
            AnalyticField::Rigid { omega, c } => (omega.cross(x) + c, omega.cross_matrix()),
            AnalyticField::Affine { a, b } => (a * x + b, a),
            AnalyticField::Abc { amplitudes, k, phases } => {
                let (a, b, c) = (amplitudes.x, amplitudes.y, amplitudes.z);
                let (sx, cx) = (k * x.x + phases.x).sin_cos();
                let (sy, cy) = (k * x.y + phases.y).sin_cos();
                let (sz, cz) = (k * x.z + phases.z).sin_cos();
                let v = Vector3::new(a * sz + c * cy, b * sx + a * cz, c * sy + b * cx);
                #[rustfmt::skip]
                let g = Matrix3::new(
                    0.0, -c * k * sy, a * k * cz,
                    b * k * cx, 0.0, -a * k * sz,
                    -b * k * sx, c * k * cy, 0.0,
                );
                (v, g)
            }
        })
    }
}
