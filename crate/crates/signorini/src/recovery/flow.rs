//! Lagrangian flow `∂_t z = v(z)`, `z(0, x) = x`, with the variational
//! equation `∂_t Z = ∇v(z) Z`, `Z(0) = I`, integrated alongside for `∇z`.

use nalgebra::{Matrix3, Vector3};

use super::fields::VectorField;
use crate::error::{LabError, Result};
use crate::geometry::Mesh;

/// The four Gronwall-type estimates checked along sampled trajectories.
/// Matrix norms are Frobenius, so `|I| = √3 ≤ 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowBound {
    /// `|z(t,x) − x| ≤ t ‖v‖ exp(t ‖∇v‖)`.
    Displacement,
    /// `|t⁻¹(z(t,x) − x) − v(x)| ≤ ‖v‖ (exp(t ‖∇v‖) − 1)`.
    Velocity,
    /// `|∇z(t,x)| ≤ 3 exp(t ‖∇v‖)`.
    GradientSize,
    /// `|∇z(t,x) − I| ≤ 3 (exp(t ‖∇v‖) − 1)`.
    GradientDeviation,
}

impl FlowBound {
    pub const ALL: [FlowBound; 4] =
        [FlowBound::Displacement, FlowBound::Velocity, FlowBound::GradientSize, FlowBound::GradientDeviation];

    pub fn name(self) -> &'static str {
        match self {
            FlowBound::Displacement => "displacement",
            FlowBound::Velocity => "velocity",
            FlowBound::GradientSize => "gradient-size",
            FlowBound::GradientDeviation => "gradient-deviation",
        }
    }

    fn bound(self, t: f64, sup_v: f64, sup_grad: f64) -> f64 {
        let growth = (t * sup_grad).exp();
        match self {
            FlowBound::Displacement => t * sup_v * growth,
            FlowBound::Velocity => sup_v * (t * sup_grad).exp_m1(),
            FlowBound::GradientSize => 3.0 * growth,
            FlowBound::GradientDeviation => 3.0 * (t * sup_grad).exp_m1(),
        }
    }
}

/// Per-bound tally of the sampled checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTally {
    pub bound: FlowBound,
    pub checks: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` seen (`0` when every `rhs` vanished with `lhs`).
    pub worst_ratio: f64,
}

/// Sampled verification of the flow estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundLedger {
    /// Norms used on the right-hand sides: the caller's recorded norms,
    /// raised to any larger value met along the trajectories.
    pub sup_value: f64,
    pub sup_gradient: f64,
    pub tallies: Vec<BoundTally>,
}

impl BoundLedger {
    pub fn violations(&self) -> usize {
        self.tallies.iter().map(|t| t.violations).sum()
    }

    pub fn checks(&self) -> usize {
        self.tallies.iter().map(|t| t.checks).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    /// Initial number of RK4 steps over `[0, t_final]`.
    pub steps: usize,
    /// Accepted `max |det ∇z − 1|`.
    pub det_tolerance: f64,
    pub max_steps: usize,
    /// Number of trajectories entering the ledger (evenly spaced; `0` = all).
    pub ledger_samples: usize,
    /// Recorded `(‖v‖_∞, ‖∇v‖_∞)` for the ledger.
    pub norms: Option<(f64, f64)>,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { steps: 32, det_tolerance: 1e-8, max_steps: 4096, ledger_samples: 0, norms: None }
    }
}

/// Flow of a set of points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFlow {
    pub start: Vec<Vector3<f64>>,
    pub positions: Vec<Vector3<f64>>,
    pub jacobians: Vec<Matrix3<f64>>,
    pub t_final: f64,
    pub steps: usize,
    /// `max |z_n − z_{2n}| + |Z_n − Z_{2n}|` between the two final runs.
    pub richardson_error: f64,
    pub max_det_drift: f64,
    /// `true` when the determinant tolerance was met before `max_steps`.
    pub converged: bool,
    pub ledger: BoundLedger,
}

/// Flow of the nodes of a mesh, with `∇z` taken at element centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub nodal: Vec<Vector3<f64>>,
    pub element_jacobians: Vec<Matrix3<f64>>,
    pub element_determinants: Vec<f64>,
    pub steps: usize,
    pub richardson_error: f64,
    pub converged: bool,
    pub ledger: BoundLedger,
}

/// `(t, [(z, Z)])` after one step, for the ledger samples.
type Snapshot = (f64, Vec<(Vector3<f64>, Matrix3<f64>)>);

struct Run {
    z: Vec<Vector3<f64>>,
    jac: Vec<Matrix3<f64>>,
    history: Vec<Snapshot>,
    sup_value: f64,
    sup_gradient: f64,
}

struct Integrator<'a> {
    v: &'a dyn VectorField,
    domain: Option<(Vector3<f64>, Vector3<f64>)>,
}

impl Integrator<'_> {
    fn eval(&self, z: &Vector3<f64>, start: &Vector3<f64>, t: f64) -> Result<(Vector3<f64>, Matrix3<f64>)> {
        let exit = || LabError::FlowExit { start: [start.x, start.y, start.z], t };
        if let Some((lo, hi)) = &self.domain {
            if (0..3).any(|a| z[a] < lo[a] || z[a] > hi[a]) {
                return Err(exit());
            }
        }
        self.v.eval(z).ok_or_else(exit)
    }

    fn run(&self, points: &[Vector3<f64>], t_final: f64, steps: usize, samples: &[usize]) -> Result<Run> {
        let dt = t_final / steps as f64;
        let mut z = points.to_vec();
        let mut jac = vec![Matrix3::identity(); points.len()];
        let mut history = Vec::with_capacity(steps);
        let (mut sv, mut sg) = (0.0f64, 0.0f64);
        for step in 0..steps {
            let t = step as f64 * dt;
            for (p, x0) in points.iter().enumerate() {
                let (z0, j0) = (z[p], jac[p]);
                let mut track = |(v, g): (Vector3<f64>, Matrix3<f64>)| {
                    sv = sv.max(v.norm());
                    sg = sg.max(g.norm());
                    (v, g)
                };
                let (v1, g1) = track(self.eval(&z0, x0, t)?);
                let k1 = (v1, g1 * j0);
                let (v2, g2) = track(self.eval(&(z0 + k1.0 * (0.5 * dt)), x0, t + 0.5 * dt)?);
                let k2 = (v2, g2 * (j0 + k1.1 * (0.5 * dt)));
                let (v3, g3) = track(self.eval(&(z0 + k2.0 * (0.5 * dt)), x0, t + 0.5 * dt)?);
                let k3 = (v3, g3 * (j0 + k2.1 * (0.5 * dt)));
                let (v4, g4) = track(self.eval(&(z0 + k3.0 * dt), x0, t + dt)?);
                let k4 = (v4, g4 * (j0 + k3.1 * dt));
                z[p] = z0 + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (dt / 6.0);
                jac[p] = j0 + (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * (dt / 6.0);
            }
            history.push(((step + 1) as f64 * dt, samples.iter().map(|&p| (z[p], jac[p])).collect()));
        }
        if let Some(p) = z.iter().position(|zp| self.domain.is_some_and(|d| outside(zp, &d))) {
            return Err(LabError::FlowExit { start: [points[p].x, points[p].y, points[p].z], t: t_final });
        }
        Ok(Run { z, jac, history, sup_value: sv, sup_gradient: sg })
    }
}

fn outside(z: &Vector3<f64>, (lo, hi): &(Vector3<f64>, Vector3<f64>)) -> bool {
    (0..3).any(|a| z[a] < lo[a] || z[a] > hi[a])
}

fn sample_indices(count: usize, samples: usize) -> Vec<usize> {
    if samples == 0 || samples >= count {
        return (0..count).collect();
    }
    (0..samples).map(|k| k * count / samples).collect()
}

/// Integrates the flow of `v` from every point in `points` up to `t_final`.
///
/// Runs RK4 with `opts.steps` and `2·opts.steps` steps and returns the finer
/// run, recording the difference between the two. Both counts are doubled
/// while `det ∇z` drifts from `1` by more than `opts.det_tolerance`. Leaving the field's domain fails
/// with [`LabError::FlowExit`].
pub fn flow_points(
    v: &dyn VectorField,
    t_final: f64,
    points: &[Vector3<f64>],
    opts: &FlowOptions,
) -> Result<PointFlow> {
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(LabError::InvalidInput(format!("flow time must be nonnegative, got {t_final}")));
    }
    if opts.steps == 0 {
        return Err(LabError::InvalidInput("flow needs at least one step".into()));
    }
    let integrator = Integrator { v, domain: v.domain() };
    let samples = sample_indices(points.len(), opts.ledger_samples);
    let mut n = opts.steps;
    let mut coarse = integrator.run(points, t_final, n, &[])?;
    loop {
        let fine = integrator.run(points, t_final, 2 * n, &samples)?;
        let richardson = coarse
            .z
            .iter()
            .zip(&fine.z)
            .zip(coarse.jac.iter().zip(&fine.jac))
            .map(|((a, b), (ja, jb))| (a - b).norm() + (ja - jb).norm())
            .fold(0.0, f64::max);
        let drift = fine.jac.iter().map(|j| (j.determinant() - 1.0).abs()).fold(0.0, f64::max);
        let converged = drift <= opts.det_tolerance;
        if converged || 4 * n > opts.max_steps {
            let ledger = ledger(&fine, points, &samples, opts.norms, |x| integrator.v.eval(x).map(|p| p.0));
            return Ok(PointFlow {
                start: points.to_vec(),
                positions: fine.z,
                jacobians: fine.jac,
                t_final,
                steps: 2 * n,
                richardson_error: richardson,
                max_det_drift: drift,
                converged,
                ledger,
            });
        }
        coarse = fine;
        n *= 2;
    }
}

fn ledger(
    run: &Run,
    points: &[Vector3<f64>],
    samples: &[usize],
    norms: Option<(f64, f64)>,
    value_at: impl Fn(&Vector3<f64>) -> Option<Vector3<f64>>,
) -> BoundLedger {
    let (mut sv, mut sg) = norms.unwrap_or((0.0, 0.0));
    sv = sv.max(run.sup_value);
    sg = sg.max(run.sup_gradient);
    let initial: Vec<Vector3<f64>> = samples.iter().map(|&p| value_at(&points[p]).unwrap_or_default()).collect();
    for v in &initial {
        sv = sv.max(v.norm());
    }
    let mut tallies: Vec<BoundTally> =
        FlowBound::ALL.iter().map(|&bound| BoundTally { bound, checks: 0, violations: 0, worst_ratio: 0.0 }).collect();
    let identity = Matrix3::<f64>::identity();
    for (t, states) in &run.history {
        for (k, (z, jac)) in states.iter().enumerate() {
            let x = points[samples[k]];
            let lhs = [(z - x).norm(), ((z - x) / *t - initial[k]).norm(), jac.norm(), (jac - identity).norm()];
            for (tally, lhs) in tallies.iter_mut().zip(lhs) {
                let rhs = tally.bound.bound(*t, sv, sg);
                tally.checks += 1;
                // Rounding in the integrator is not part of the estimate.
                let slack = 1e-12 * (1.0 + rhs);
                if lhs > rhs + slack {
                    tally.violations += 1;
                }
                if rhs > 0.0 {
                    tally.worst_ratio = tally.worst_ratio.max(lhs / rhs);
                }
            }
        }
    }
    BoundLedger { sup_value: sv, sup_gradient: sg, tallies }
}

/// Flows the nodes of `mesh` to time `t_final`; `∇z` and `det ∇z` are those
/// of the variational equation at each element centroid.
pub fn integrate_flow(v: &dyn VectorField, t_final: f64, mesh: &Mesh, opts: &FlowOptions) -> Result<FlowResult> {
    let mut points = mesh.nodes().to_vec();
    points.extend((0..mesh.num_elements()).map(|e| mesh.centroid(e)));
    let flow = flow_points(v, t_final, &points, opts)?;
    let nn = mesh.num_nodes();
    let element_jacobians = flow.jacobians[nn..].to_vec();
    Ok(FlowResult {
        nodal: flow.positions[..nn].to_vec(),
        element_determinants: element_jacobians.iter().map(|j| j.determinant()).collect(),
        element_jacobians,
        steps: flow.steps,
        richardson_error: flow.richardson_error,
        converged: flow.converged,
        ledger: flow.ledger,
    })
}
