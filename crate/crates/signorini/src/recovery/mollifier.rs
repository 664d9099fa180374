//! Mollification by the polynomial bump `ρ(r) = C (1 − r²)³` on the unit ball.
//!
//! With `C = 315/(64π)` the bump has unit mass, and
//! `K = 4π ∫₀¹ |ρ′(r)| r² dr = πC = 315/64`.
//!
//! The convolution `v_ε(x) = ∫ ρ(y) v(x − εy) dy` is evaluated with a fixed
//! product rule on the ball (Gauss–Legendre in `r`, a symmetric 14-point rule
//! on the sphere). The rule has unit mass and vanishing first moments, so it
//! reproduces affine fields exactly, and since value and gradient are the same
//! weighted sum, `tr ∇v_ε` is a weighted sum of `div v` samples.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, Matrix3, Vector3};

use super::fields::VectorField;
use crate::error::{LabError, Result};

pub const MOLLIFIER_NORMALIZATION: f64 = 315.0 / (64.0 * PI);
pub const MOLLIFIER_K: f64 = 315.0 / 64.0;

const RADIAL_POINTS: usize = 6;

/// `ρ(r)` for `r = |y|`.
pub fn mollifier_profile(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        MOLLIFIER_NORMALIZATION * (1.0 - r * r).powi(3)
    }
}

fn mollifier_derivative(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        -6.0 * MOLLIFIER_NORMALIZATION * r * (1.0 - r * r).powi(2)
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]` (Golub–Welsch).
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut jacobi = DMatrix::zeros(n, n);
    for k in 1..n {
        let kf = k as f64;
        let b = kf / (4.0 * kf * kf - 1.0).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let mut rule: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (0.5 * (eig.eigenvalues[i] + 1.0), v0 * v0)
        })
        .collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

/// `∫ ρ` over the unit ball by a radial rule exact for the polynomial integrand.
pub fn mollifier_mass() -> f64 {
    gauss_legendre(RADIAL_POINTS).iter().map(|(r, w)| 4.0 * PI * w * r * r * mollifier_profile(*r)).sum()
}

/// `K = 4π ∫₀¹ |ρ′(r)| r² dr` by quadrature.
pub fn mollifier_k_by_quadrature() -> f64 {
    gauss_legendre(RADIAL_POINTS).iter().map(|(r, w)| 4.0 * PI * w * r * r * mollifier_derivative(*r).abs()).sum()
}

/// Points `y_q` and weights `w_q` with `Σ w_q g(y_q) ≈ ∫ ρ(y) g(y) dy`.
pub fn ball_rule() -> &'static [(Vector3<f64>, f64)] {
    static RULE: OnceLock<Vec<(Vector3<f64>, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let s = 1.0 / 3f64.sqrt();
        let mut sphere: Vec<(Vector3<f64>, f64)> = Vec::with_capacity(14);
        for i in 0..3 {
            for sign in [1.0, -1.0] {
                sphere.push((Vector3::ith(i, sign), 1.0 / 15.0));
            }
        }
        for a in [s, -s] {
            for b in [s, -s] {
                for c in [s, -s] {
                    sphere.push((Vector3::new(a, b, c), 3.0 / 40.0));
                }
            }
        }
        let mut rule = Vec::with_capacity(RADIAL_POINTS * sphere.len());
        for (r, w) in gauss_legendre(RADIAL_POINTS) {
            let radial = 4.0 * PI * w * r * r * mollifier_profile(r);
            for (dir, a) in &sphere {
                rule.push((dir * r, radial * a));
            }
        }
        let mass: f64 = rule.iter().map(|p| p.1).sum();
        for p in &mut rule {
            p.1 /= mass;
        }
        rule
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifyOptions {
    /// Hölder exponent `γ`.
    pub gamma: f64,
    /// Probe grid density per axis.
    pub probes_per_axis: usize,
    /// Short-range pairs for the Hölder seminorm are sampled at distances
    /// `spacing / 2^k`, `k = 1..=pair_levels`.
    pub pair_levels: usize,
    /// Probe region for fields defined on all of space.
    pub probe_box: Option<(Vector3<f64>, Vector3<f64>)>,
}

impl Default for MollifyOptions {
    fn default() -> Self {
        MollifyOptions { gamma: 0.25, probes_per_axis: 10, pair_levels: 6, probe_box: None }
    }
}

/// Sampled `‖v‖_{0,γ} = sup|v| + sup |v(x) − v(y)| / |x − y|^γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderEstimate {
    pub sup: f64,
    pub seminorm: f64,
    pub gamma: f64,
    /// Shortest pair distance sampled.
    pub resolution: f64,
}

impl HolderEstimate {
    pub fn norm(&self) -> f64 {
        self.sup + self.seminorm
    }
}

/// Norms and estimate checks recorded for a mollified field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothFieldNorms {
    pub eps: f64,
    pub k: f64,
    /// `‖v_ε‖_∞` and `‖∇v_ε‖_∞` (Frobenius), over the probes.
    pub sup_value: f64,
    pub sup_gradient: f64,
    /// Largest `|div v_ε|` seen at a probe.
    pub max_divergence: f64,
    /// Norms of the field before mollification.
    pub source: HolderEstimate,
    /// `max |v_ε − v|` over the probes and its bound `ε^γ ‖v‖_{0,γ}`.
    pub sup_error: f64,
    pub sup_error_bound: f64,
    /// Bound `K ε⁻¹ ‖v‖_∞` on `‖∇v_ε‖_∞`.
    pub gradient_bound: f64,
}

impl SmoothFieldNorms {
    pub fn sup_error_within_bound(&self) -> bool {
        self.sup_error <= self.sup_error_bound
    }

    pub fn gradient_within_bound(&self) -> bool {
        self.sup_gradient <= self.gradient_bound
    }
}

/// `v_ε = v * ρ_ε` together with its recorded norms.
pub struct SmoothField<'a> {
    source: &'a dyn VectorField,
    eps: f64,
    norms: SmoothFieldNorms,
}

impl std::fmt::Debug for SmoothField<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothField").field("eps", &self.eps).field("norms", &self.norms).finish()
    }
}

impl SmoothField<'_> {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn norms(&self) -> &SmoothFieldNorms {
        &self.norms
    }
}

impl VectorField for SmoothField<'_> {
    fn eval(&self, x: &Vector3<f64>) -> Option<(Vector3<f64>, Matrix3<f64>)> {
        let mut v = Vector3::zeros();
        let mut g = Matrix3::zeros();
        for (y, w) in ball_rule() {
            let (vy, gy) = self.source.eval(&(x - y * self.eps))?;
            v += vy * *w;
            g += gy * *w;
        }
        Some((v, g))
    }

    fn domain(&self) -> Option<(Vector3<f64>, Vector3<f64>)> {
        self.source.domain().map(|(lo, hi)| {
            let e = Vector3::repeat(self.eps);
            (lo + e, hi - e)
        })
    }
}

fn grid(lo: &Vector3<f64>, hi: &Vector3<f64>, n: usize) -> Vec<Vector3<f64>> {
    let n = n.max(2);
    let mut points = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let t = Vector3::new(i as f64, j as f64, k as f64) / (n - 1) as f64;
                points.push(lo + (hi - lo).component_mul(&t));
            }
        }
    }
    points
}

fn inside(x: &Vector3<f64>, lo: &Vector3<f64>, hi: &Vector3<f64>) -> bool {
    (0..3).all(|a| x[a] >= lo[a] && x[a] <= hi[a])
}

/// Sampled Hölder norm of `v` over the box `[lo, hi]`: all pairs of a
/// `n³` grid, plus pairs at distances `spacing / 2^k` along the 13 lattice
/// directions from every grid point.
pub fn holder_estimate(
    v: &dyn VectorField,
    lo: &Vector3<f64>,
    hi: &Vector3<f64>,
    n: usize,
    levels: usize,
    gamma: f64,
) -> Result<HolderEstimate> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(LabError::InvalidInput(format!("Hölder exponent must lie in (0, 1), got {gamma}")));
    }
    let points = grid(lo, hi, n);
    let values: Vec<Vector3<f64>> = points
        .iter()
        .map(|x| v.eval(x).map(|p| p.0))
        .collect::<Option<_>>()
        .ok_or_else(|| LabError::InvalidInput("probe grid leaves the field's domain".into()))?;
    let mut sup: f64 = values.iter().map(|u| u.norm()).fold(0.0, f64::max);
    let mut semi: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = (points[i] - points[j]).norm();
            semi = semi.max((values[i] - values[j]).norm() / d.powf(gamma));
        }
    }
    let spacing = (hi - lo).min() / (n.max(2) - 1) as f64;
    let mut directions = Vec::with_capacity(13);
    for a in -1i32..=1 {
        for b in -1i32..=1 {
            for c in -1i32..=1 {
                let d = Vector3::new(a as f64, b as f64, c as f64);
                if (a, b, c) > (0, 0, 0) {
                    directions.push(d.normalize());
                }
            }
        }
    }
    let mut resolution = spacing;
    for k in 1..=levels {
        let d = spacing / 2f64.powi(k as i32);
        resolution = d;
        for (x, vx) in points.iter().zip(&values) {
            for dir in &directions {
                let p = x + dir * d;
                if !inside(&p, lo, hi) {
                    continue;
                }
                if let Some((vp, _)) = v.eval(&p) {
                    sup = sup.max(vp.norm());
                    semi = semi.max((vp - vx).norm() / d.powf(gamma));
                }
            }
        }
    }
    Ok(HolderEstimate { sup, seminorm: semi, gamma, resolution })
}

/// Mollifies `v` at radius `eps`, measuring the norms that enter the flow
/// estimates and checking `‖v_ε − v‖_∞ ≤ ε^γ‖v‖_{0,γ}` and
/// `‖∇v_ε‖_∞ ≤ K ε⁻¹ ‖v‖_∞` on the probe grid.
///
/// The checks are recorded, not asserted. Fails with
/// [`LabError::UnderResolved`] when `eps` is below twice the shortest pair
/// distance of the Hölder sampling.
pub fn mollify<'a>(v: &'a dyn VectorField, eps: f64, opts: &MollifyOptions) -> Result<SmoothField<'a>> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(LabError::InvalidInput(format!("mollifier radius must be positive, got {eps}")));
    }
    let (src_lo, src_hi) = match (v.domain(), opts.probe_box) {
        (Some(d), _) => d,
        (None, Some((lo, hi))) => {
            let e = Vector3::repeat(eps);
            (lo - e, hi + e)
        }
        (None, None) => {
            return Err(LabError::InvalidInput("a probe box is required for fields defined everywhere".into()))
        }
    };
    if (0..3).any(|a| src_hi[a] - src_lo[a] <= 2.0 * eps) {
        return Err(LabError::InvalidInput(format!("mollifier radius {eps} does not fit the field's domain")));
    }
    let source = holder_estimate(v, &src_lo, &src_hi, opts.probes_per_axis, opts.pair_levels, opts.gamma)?;
    if eps < 2.0 * source.resolution {
        return Err(LabError::UnderResolved { eps, spacing: source.resolution });
    }
    let mut field = SmoothField {
        source: v,
        eps,
        norms: SmoothFieldNorms {
            eps,
            k: MOLLIFIER_K,
            sup_value: 0.0,
            sup_gradient: 0.0,
            max_divergence: 0.0,
            source,
            sup_error: 0.0,
            sup_error_bound: eps.powf(opts.gamma) * source.norm(),
            gradient_bound: MOLLIFIER_K * source.sup / eps,
        },
    };
    let e = Vector3::repeat(eps);
    let (lo, hi) = (src_lo + e, src_hi - e);
    let mut n = field.norms;
    for x in grid(&lo, &hi, opts.probes_per_axis) {
        let (ve, ge) = field.eval(&x).expect("probe inside the shrunk domain");
        let (v0, _) = v.eval(&x).expect("probe inside the domain");
        n.sup_value = n.sup_value.max(ve.norm());
        n.sup_gradient = n.sup_gradient.max(ge.norm());
        n.max_divergence = n.max_divergence.max(ge.trace().abs());
        n.sup_error = n.sup_error.max((ve - v0).norm());
    }
    field.norms = n;
    Ok(field)
}
