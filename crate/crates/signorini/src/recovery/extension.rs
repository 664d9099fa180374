//! Divergence-free extension of a P1 displacement beyond a box domain.
//!
//! Across a face `x_k = a` the field is continued by a two-term reflection:
//! at distance `s` outside,
//!
//! ```text
//! v_t(s) = −3 u_t(a − s) + 4 u_t(a − 2s)     (tangential components)
//! v_k(s) =  3 u_k(a − s) − 2 u_k(a − 2s)     (normal component)
//! ```
//!
//! Both combinations reproduce `u` at `s = 0`, so the extension is continuous,
//! and the weights satisfy `a_m = −λ_m b_m` for the reflection ratios
//! `λ = (1, 2)`, which makes `div v = 0` wherever `div u = 0`. Edges and
//! corners are handled by applying the construction axis by axis.

use nalgebra::{Matrix3, Vector3};

use super::fields::VectorField;
use crate::error::{LabError, Result};
use crate::geometry::{DomainShape, Mesh, PointLocator};
use crate::kinematics::DisplacementField;

const TERMS: [(f64, f64, f64); 2] = [(1.0, -3.0, 3.0), (2.0, 4.0, -2.0)];

#[derive(Debug, Clone)]
pub struct BoxExtension<'a> {
    mesh: &'a Mesh,
    locator: PointLocator,
    values: Vec<Vector3<f64>>,
    gradients: Vec<Matrix3<f64>>,
    lo: Vector3<f64>,
    hi: Vector3<f64>,
    margin: f64,
}

impl<'a> BoxExtension<'a> {
    /// Extends `u` to the box enlarged by `margin` on every side. The margin
    /// may not exceed half the shortest side; `None` selects that maximum.
    pub fn new(u: &DisplacementField, mesh: &'a Mesh, margin: Option<f64>) -> Result<BoxExtension<'a>> {
        mesh.check_nodal(u.nodal().len())?;
        let DomainShape::Box { min, max } = mesh.shape() else {
            return Err(LabError::NotABox);
        };
        let limit = 0.5 * (max - min).min();
        let margin = margin.unwrap_or(limit);
        if !(margin > 0.0 && margin <= limit) {
            return Err(LabError::InvalidInput(format!("extension margin must lie in (0, {limit}], got {margin}")));
        }
        Ok(BoxExtension {
            mesh,
            locator: PointLocator::new(mesh),
            values: u.nodal().to_vec(),
            gradients: u.gradients().to_vec(),
            lo: min,
            hi: max,
            margin,
        })
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// The original box `Ω`.
    pub fn inner_box(&self) -> (Vector3<f64>, Vector3<f64>) {
        (self.lo, self.hi)
    }

    fn inside(&self, x: &Vector3<f64>) -> Option<(Vector3<f64>, Matrix3<f64>)> {
        let (e, lam) = self.locator.locate(self.mesh, x, 1e-9)?;
        let t = self.mesh.tets()[e];
        let v = (0..4).map(|a| self.values[t[a]] * lam[a]).sum();
        Some((v, self.gradients[e]))
    }

    fn extend(&self, x: &Vector3<f64>, axis: usize) -> Option<(Vector3<f64>, Matrix3<f64>)> {
        if axis == 3 {
            return self.inside(x);
        }
        let (face, outward) = if x[axis] > self.hi[axis] {
            (self.hi[axis], 1.0)
        } else if x[axis] < self.lo[axis] {
            (self.lo[axis], -1.0)
        } else {
            return self.extend(x, axis + 1);
        };
        let s = (x[axis] - face) * outward;
        if s > self.margin * (1.0 + 1e-12) {
            return None;
        }
        let mut v = Vector3::zeros();
        let mut g = Matrix3::zeros();
        for (lambda, tangential, normal) in TERMS {
            let mut p = *x;
            p[axis] = face - outward * lambda * s;
            let (vp, mut gp) = self.extend(&p, axis + 1)?;
            // dp/dx_axis = −λ.
            let col = gp.column(axis) * -lambda;
            gp.set_column(axis, &col);
            for i in 0..3 {
                let w = if i == axis { normal } else { tangential };
                v[i] += w * vp[i];
                for j in 0..3 {
                    g[(i, j)] += w * gp[(i, j)];
                }
            }
        }
        Some((v, g))
    }
}

impl VectorField for BoxExtension<'_> {
    fn eval(&self, x: &Vector3<f64>) -> Option<(Vector3<f64>, Matrix3<f64>)> {
        self.extend(x, 0)
    }

    fn domain(&self) -> Option<(Vector3<f64>, Vector3<f64>)> {
        let m = Vector3::repeat(self.margin);
        Some((self.lo - m, self.hi + m))
    }
}
