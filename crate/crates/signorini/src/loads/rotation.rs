use nalgebra::{Matrix3, Rotation3, Unit, Vector3};

use crate::error::{LabError, Result};

/// Proper rotation of R³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    matrix: Matrix3<f64>,
}

impl Default for Rotation {
    fn default() -> Self {
        Rotation::identity()
    }
}

impl Rotation {
    pub fn identity() -> Rotation {
        Rotation { matrix: Matrix3::identity() }
    }

    /// Right-handed rotation by `angle` radians about `axis` (need not be unit).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Result<Rotation> {
        if !(axis.norm() > 0.0) {
            return Err(LabError::InvalidInput("rotation axis must be nonzero".into()));
        }
        Ok(Rotation { matrix: *Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle).matrix() })
    }

    /// Rotation by `theta` about `e3`.
    pub fn about_e3(theta: f64) -> Rotation {
        let (s, c) = theta.sin_cos();
        Rotation { matrix: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0) }
    }

    /// Rotation from the exponential map of `omega` (axis times angle).
    pub fn from_scaled_axis(omega: &Vector3<f64>) -> Rotation {
        Rotation { matrix: *Rotation3::from_scaled_axis(*omega).matrix() }
    }

    /// Accepts `m` if `mᵀm = I` and `det m = 1` within `1e-12`.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Rotation> {
        let r = Rotation { matrix: m };
        if !r.is_valid(1e-12) {
            return Err(LabError::InvalidInput("matrix is not a rotation".into()));
        }
        Ok(r)
    }

    /// Wraps a matrix known to be orthonormal up to rounding.
    pub(crate) fn from_matrix_unchecked(m: Matrix3<f64>) -> Rotation {
        Rotation { matrix: m }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        (self.matrix.transpose() * self.matrix - Matrix3::identity()).amax() <= tol
            && (self.matrix.determinant() - 1.0).abs() <= tol
    }

    /// Unit axis and angle in `[0, π]`; the identity reports axis `e3`, angle 0.
    pub fn axis_angle(&self) -> (Vector3<f64>, f64) {
        let r = Rotation3::from_matrix_unchecked(self.matrix);
        match r.axis_angle() {
            Some((axis, angle)) => (axis.into_inner(), angle),
            None => {
                let angle = r.angle();
                if angle > 1.0 {
                    // Half turn: axis from the symmetric part R + I = 2 a aᵀ.
                    let s = self.matrix + Matrix3::identity();
                    let col = (0..3).max_by(|&i, &j| s[(i, i)].total_cmp(&s[(j, j)])).unwrap_or(0);
                    (s.column(col).normalize(), std::f64::consts::PI)
                } else {
                    (Vector3::z(), 0.0)
                }
            }
        }
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation { matrix: self.matrix * other.matrix }
    }

    pub fn transpose(&self) -> Rotation {
        Rotation { matrix: self.matrix.transpose() }
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.matrix * v
    }

    /// `true` when the rotation fixes `e3` (within `tol`).
    pub fn fixes_e3(&self, tol: f64) -> bool {
        (self.matrix.column(2) - Vector3::z()).amax() <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_angle_round_trip() {
        let axis = Vector3::new(1.0, -2.0, 0.5).normalize();
        let r = Rotation::from_axis_angle(&axis, 0.7).unwrap();
        assert!(r.is_valid(1e-12));
        let (a, t) = r.axis_angle();
        assert!((a - axis).norm() < 1e-12 && (t - 0.7).abs() < 1e-12);
        let (a, t) = Rotation::identity().axis_angle();
        assert_eq!((a, t), (Vector3::z(), 0.0));
        let half = Rotation::from_axis_angle(&Vector3::x(), std::f64::consts::PI).unwrap();
        let (a, t) = half.axis_angle();
        assert!((t - std::f64::consts::PI).abs() < 1e-12);
        assert!((a.x.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn about_e3_matches_general_constructor() {
        let a = Rotation::about_e3(0.4);
        let b = Rotation::from_axis_angle(&Vector3::z(), 0.4).unwrap();
        assert!((a.matrix() - b.matrix()).norm() < 1e-15);
        assert!(a.fixes_e3(1e-15));
    }

    #[test]
    fn rejects_non_rotations() {
        assert!(Rotation::from_matrix(Matrix3::identity() * 2.0).is_err());
        assert!(Rotation::from_matrix(-Matrix3::identity()).is_err());
        assert!(Rotation::from_axis_angle(&Vector3::zeros(), 1.0).is_err());
    }
}
