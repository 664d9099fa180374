//! Compatibility between load and obstacle: `Φ`, the shear functional, the
//! kernel set and the load center.

use nalgebra::{Matrix3, UnitQuaternion, Vector2, Vector3, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::functional::{resultant_and_torque, Load};
use super::rotation::Rotation;
use crate::error::{LabError, Result};
use crate::geometry::ObstacleSet;
use crate::kinematics::polar_rotation;

/// Absolute tolerance of every admissibility test, scaled by the load size.
pub const ADMISSIBILITY_TOL: f64 = 1e-9;
/// Default SO(3) sample count.
pub const DEFAULT_BUDGET: usize = 4000;
const ASCENT_STARTS: usize = 10;

/// `Φ(R) = L((R − I) x) − L(e3) min_E (R x)_3`.
pub fn phi(load: &Load, e: &ObstacleSet, r: &Rotation) -> f64 {
    phi_matrix(load, e, r.matrix())
}

fn phi_matrix(load: &Load, e: &ObstacleSet, r: &Matrix3<f64>) -> f64 {
    let rel = r - Matrix3::identity();
    load.apply_affine(&rel, &Vector3::zeros()) - load.resultant().z * e.min_rotated_height(r)
}

/// `L((R x − x)_α e_α)`, summed over the horizontal components.
pub fn shear_functional(load: &Load, r: &Rotation) -> f64 {
    shear_matrix(load, r.matrix())
}

fn shear_matrix(load: &Load, r: &Matrix3<f64>) -> f64 {
    let m = load.moments();
    let mut s = 0.0;
    for alpha in 0..2 {
        for j in 0..3 {
            let rel = r[(alpha, j)] - if alpha == j { 1.0 } else { 0.0 };
            s += rel * m[(alpha, j)];
        }
    }
    s
}

/// The two possible kernel sets `{R : Φ(R) = 0}` for admissible loads with `L(e3) < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelClass {
    IdentityOnly,
    RotationsAboutE3,
}

impl KernelClass {
    pub fn name(self) -> &'static str {
        match self {
            KernelClass::IdentityOnly => "IdentityOnly",
            KernelClass::RotationsAboutE3 => "RotationsAboutE3",
        }
    }
}

/// Outcome of the kernel classification with its cross-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelDecision {
    pub class: KernelClass,
    /// `max_θ |Φ(R_θ)|` over the grid of rotations about `e3`.
    pub grid_max_abs_phi: f64,
    pub grid_points: usize,
    /// `L(x1 e1 + x2 e2)`; the kernel contains all rotations about `e3` iff it vanishes.
    pub closed_form: f64,
    pub agree: bool,
}

pub fn kernel_decision(load: &Load, e: &ObstacleSet, grid_points: usize) -> Result<KernelDecision> {
    let l3 = load.resultant().z;
    if !(l3 < 0.0) {
        return Err(LabError::KernelPrecondition(l3));
    }
    let tol = tolerance(load);
    let grid_points = grid_points.max(2);
    let grid_max_abs_phi = (0..grid_points)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / grid_points as f64;
            phi(load, e, &Rotation::about_e3(theta)).abs()
        })
        .fold(0.0, f64::max);
    let m = load.moments();
    let closed_form = m[(0, 0)] + m[(1, 1)];
    let class = if grid_max_abs_phi <= tol { KernelClass::RotationsAboutE3 } else { KernelClass::IdentityOnly };
    let closed_class = if closed_form.abs() <= tol { KernelClass::RotationsAboutE3 } else { KernelClass::IdentityOnly };
    Ok(KernelDecision { class, grid_max_abs_phi, grid_points, closed_form, agree: class == closed_class })
}

pub fn classify_kernel(load: &Load, e: &ObstacleSet) -> Result<KernelClass> {
    Ok(kernel_decision(load, e, 720)?.class)
}

/// Point `x_L` on the support plane about which the load has no torque.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadCenter {
    pub point: Vector3<f64>,
    /// `‖T(x_L)‖`.
    pub residual: f64,
    /// `(x_L1, x_L2)` lies in the relative interior of the obstacle hull.
    pub interior: bool,
}

pub fn find_load_center(load: &Load, e: &ObstacleSet) -> Result<LoadCenter> {
    let (f, t0) = resultant_and_torque(load, &Vector3::zeros());
    if f.z.abs() <= 1e-14 * (1.0 + f.norm() + load.moments().norm()) {
        return Err(LabError::LoadCenterUndetermined);
    }
    // x_L ∧ F with x_L = (ξ1, ξ2, 0) has first two components (ξ2 F3, −ξ1 F3).
    let point = Vector3::new(-t0.y / f.z, t0.x / f.z, 0.0);
    let (_, residual) = resultant_and_torque(load, &point);
    let interior = e.hull_relative_interior(&Vector2::new(point.x, point.y), 1e-12);
    Ok(LoadCenter { point, residual: residual.norm(), interior })
}

/// All admissibility quantities of a load with respect to an obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub l_e1: f64,
    pub l_e2: f64,
    pub l_e3: f64,
    /// `L(e3 ∧ x)`.
    pub torque_about_e3: f64,
    /// `L(e3 ∧ (e3 ∧ x))`.
    pub planar_compression: f64,
    pub worst_phi: f64,
    pub worst_phi_rotation: Rotation,
    pub worst_shear: f64,
    pub worst_shear_rotation: Rotation,
    /// Largest sampled `L((R − I) x + c)` over rotations and `c ∈ C_R`.
    pub worst_l0: f64,
    /// `max_a |L((a ∧ x)_α e_α)|` over unit axes.
    pub shear_first_order: f64,
    /// `max_a L((a ∧ (a ∧ x))_α e_α)` over unit axes.
    pub shear_second_order: f64,
    /// `(L(x3 e1), L(x3 e2))`.
    pub vertical_moments: [f64; 2],
    pub kernel: Option<KernelDecision>,
    pub load_center: Option<LoadCenter>,
    pub budget: usize,
    pub seed: u64,
    pub tolerance: f64,
}

/// A failed admissibility condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub condition: &'static str,
    pub value: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} violated (value {:.6e})", self.condition, self.value)
    }
}

impl AdmissibilityReport {
    /// Necessary conditions on resultant and torque.
    pub fn basic_violations(&self) -> Vec<Violation> {
        let tol = self.tolerance;
        let mut v = Vec::new();
        if self.l_e3 > tol {
            v.push(Violation { condition: "L(e₃) ≤ 0", value: self.l_e3 });
        }
        if self.l_e1.abs() > tol {
            v.push(Violation { condition: "L(e₁) = 0", value: self.l_e1 });
        }
        if self.l_e2.abs() > tol {
            v.push(Violation { condition: "L(e₂) = 0", value: self.l_e2 });
        }
        if self.torque_about_e3.abs() > tol {
            v.push(Violation { condition: "L(e₃∧x) = 0", value: self.torque_about_e3 });
        }
        if self.planar_compression > tol {
            v.push(Violation { condition: "L(e₃∧(e₃∧x)) ≤ 0", value: self.planar_compression });
        }
        v
    }

    /// Every violated condition, basic ones first.
    pub fn violations(&self) -> Vec<Violation> {
        let tol = self.tolerance;
        let mut v = self.basic_violations();
        if self.worst_phi > tol {
            v.push(Violation { condition: "Φ(R) ≤ 0 for all R", value: self.worst_phi });
        }
        if self.worst_shear > tol {
            v.push(Violation { condition: "L((Rx−x)_α e_α) ≤ 0 for all R", value: self.worst_shear });
        }
        if self.shear_first_order > tol {
            v.push(Violation { condition: "L((a∧x)_α e_α) = 0", value: self.shear_first_order });
        }
        if self.shear_second_order > tol {
            v.push(Violation { condition: "L((a∧(a∧x))_α e_α) ≤ 0", value: self.shear_second_order });
        }
        if let Some(c) = &self.load_center {
            if !c.interior {
                v.push(Violation { condition: "load center in the relative interior of E", value: c.residual });
            }
        }
        v
    }

    pub fn is_admissible(&self) -> bool {
        self.violations().is_empty()
    }

    /// `true` when the two equivalent forms of the compatibility condition
    /// (translations sampled explicitly vs. `Φ` with resultant conditions)
    /// agree on the verdict.
    pub fn l0_l1_agree(&self) -> bool {
        let tol = self.tolerance;
        let l1 = self.l_e1.abs() <= tol && self.l_e2.abs() <= tol && self.l_e3 <= tol && self.worst_phi <= tol;
        l1 == (self.worst_l0 <= tol)
    }
}

fn tolerance(load: &Load) -> f64 {
    ADMISSIBILITY_TOL * (1.0 + load.resultant().norm() + load.moments().norm()).max(1.0)
}

/// Haar-distributed rotations from a seeded stream; a longer budget extends a
/// shorter one.
pub fn sample_rotations(count: usize, seed: u64) -> Vec<Matrix3<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let q = Vector4::from_fn(|_, _| StandardNormal.sample(&mut rng));
            let q = nalgebra::Quaternion::from_vector(q);
            *UnitQuaternion::from_quaternion(q).to_rotation_matrix().matrix()
        })
        .collect()
}

/// Derivative-free pattern search on SO(3) through right multiplication by
/// exponentials of the coordinate axes.
fn ascend(f: &dyn Fn(&Matrix3<f64>) -> f64, start: Matrix3<f64>) -> (f64, Matrix3<f64>) {
    let mut r = start;
    let mut best = f(&r);
    let mut step = 0.2;
    let mut evals = 0;
    while step > 1e-10 && evals < 20_000 {
        let mut improved = false;
        for axis in 0..3 {
            for sign in [1.0, -1.0] {
                let omega = Vector3::ith(axis, sign * step);
                let cand = r * Rotation::from_scaled_axis(&omega).matrix();
                let val = f(&cand);
                evals += 1;
                if val > best {
                    best = val;
                    r = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, r)
}

/// Maximum of `f` over sampled rotations refined by local ascent from the
/// best samples of every dyadic prefix of the sample stream, so doubling the
/// budget never lowers the result.
fn maximize_over_so3(f: &dyn Fn(&Matrix3<f64>) -> f64, samples: &[Matrix3<f64>]) -> (f64, Matrix3<f64>) {
    let values: Vec<f64> = samples.iter().map(f).collect();
    let mut best = (f(&Matrix3::identity()), Matrix3::identity());
    for (v, r) in values.iter().zip(samples) {
        if *v > best.0 {
            best = (*v, *r);
        }
    }
    let mut starts: Vec<usize> = Vec::new();
    let mut prefix = samples.len();
    while prefix > 0 {
        let mut idx: Vec<usize> = (0..prefix).collect();
        idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        starts.extend(idx.into_iter().take(ASCENT_STARTS));
        if prefix < 2000 {
            break;
        }
        prefix /= 2;
    }
    starts.sort_unstable();
    starts.dedup();
    for i in starts {
        let (v, r) = ascend(f, samples[i]);
        if v > best.0 {
            best = (v, r);
        }
    }
    best
}

fn fibonacci_axes(n: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            Vector3::new(r * t.cos(), r * t.sin(), z)
        })
        .collect()
}

/// Checks every admissibility condition, maximizing `Φ` and the shear
/// functional over `budget` sampled rotations plus local ascent.
pub fn verify_global_admissibility(load: &Load, e: &ObstacleSet, budget: usize, seed: u64) -> AdmissibilityReport {
    let budget = budget.max(1000);
    let tol = tolerance(load);
    let f = load.resultant();
    let m = load.moments();
    let e3x = Vector3::z().cross_matrix();

    let samples = sample_rotations(budget, seed);
    let phi_fn = |r: &Matrix3<f64>| phi_matrix(load, e, r);
    let (worst_phi, phi_rot) = maximize_over_so3(&phi_fn, &samples);
    let shear_fn = |r: &Matrix3<f64>| shear_matrix(load, r);
    let (mut worst_shear, mut shear_rot) = maximize_over_so3(&shear_fn, &samples);
    // The shear functional is linear in R: its maximum is attained at the
    // polar factor of the horizontal moment rows.
    let mut b = *m;
    b.set_row(2, &nalgebra::RowVector3::zeros());
    let exact = *polar_rotation(&b).rotation.matrix();
    if shear_fn(&exact) > worst_shear {
        worst_shear = shear_fn(&exact);
        shear_rot = exact;
    }

    // Compatibility in its translation form, sampled directly.
    let mut worst_l0 = f64::NEG_INFINITY;
    let mut rots: Vec<Matrix3<f64>> = samples.iter().take(2000).copied().collect();
    rots.push(phi_rot);
    rots.push(Matrix3::identity());
    for r in &rots {
        let floor = -e.min_rotated_height(r);
        let rel = r - Matrix3::identity();
        for c1 in [-1.0, 0.0, 1.0] {
            for c2 in [-1.0, 0.0, 1.0] {
                for lift in [0.0, 1.0] {
                    let c = Vector3::new(c1, c2, floor + lift);
                    worst_l0 = worst_l0.max(load.apply_affine(&rel, &c));
                }
            }
        }
    }

    let mut shear_first_order: f64 = 0.0;
    let mut shear_second_order = f64::NEG_INFINITY;
    let horizontal =
        |a: &Matrix3<f64>| -> f64 { (0..2).map(|i| (0..3).map(|j| a[(i, j)] * m[(i, j)]).sum::<f64>()).sum() };
    for a in fibonacci_axes(200).into_iter().chain([Vector3::x(), Vector3::y(), Vector3::z()]) {
        let ax = a.cross_matrix();
        shear_first_order = shear_first_order.max(horizontal(&ax).abs());
        shear_second_order = shear_second_order.max(horizontal(&(ax * ax)));
    }

    let kernel = kernel_decision(load, e, 720).ok();
    let load_center = find_load_center(load, e).ok();

    AdmissibilityReport {
        l_e1: f.x,
        l_e2: f.y,
        l_e3: f.z,
        torque_about_e3: load.apply_affine(&e3x, &Vector3::zeros()),
        planar_compression: load.apply_affine(&(e3x * e3x), &Vector3::zeros()),
        worst_phi,
        worst_phi_rotation: Rotation::from_matrix_unchecked(phi_rot),
        worst_shear,
        worst_shear_rotation: Rotation::from_matrix_unchecked(shear_rot),
        worst_l0,
        shear_first_order,
        shear_second_order,
        vertical_moments: [m[(0, 2)], m[(1, 2)]],
        kernel,
        load_center,
        budget,
        seed,
        tolerance: tol,
    }
}
