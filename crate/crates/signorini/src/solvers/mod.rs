//! Minimization of the nonlinear functionals `G_h^I` and of the limit
//! functionals `E^I`, `G^I`, `G̃^I`.

mod assembly;
mod engine;
mod limit;
mod nonlinear;

use nalgebra::Vector3;

pub use engine::{minimize_bounded, project, EngineOptions, EngineOutcome, SmoothObjective, Strategy, Termination};
pub use limit::{
    evaluate_limit, limit_elastic_energy, max_load_over_kernel, minimize_limit, optimal_shear_b,
    relaxed_elastic_energy, rotate_field, tilde_lift, LimitVariant, QuadraticProblem,
};
pub use nonlinear::{minimize_nonlinear, nonlinear_energy, Multistart, NonlinearProblem};

use crate::loads::Rotation;

/// Penalty continuation for the augmented Lagrangian: `stages` weights
/// `κ0, κ0·factor, …`, each followed by a multiplier update, then up to
/// `max_updates` further updates at the last weight until the constraint
/// residual drops below `target` or stops decreasing.
///
/// The per-element constraints are linearly dependent on structured meshes,
/// so part of the residual can be out of reach of the multipliers; updating
/// them further only makes them drift along the dependent direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySchedule {
    pub kappa0: f64,
    pub factor: f64,
    pub stages: usize,
    pub max_updates: usize,
    pub target: f64,
    /// Residual above which the result is flagged infeasible.
    pub flag: f64,
}

impl PenaltySchedule {
    /// `κ ∈ {1e2, 1e3, 1e4}·c1`, residual target `1e-9` on `div u`.
    pub fn for_limit(c1: f64) -> PenaltySchedule {
        PenaltySchedule { kappa0: 1e2 * c1, factor: 10.0, stages: 3, max_updates: 100, target: 1e-9, flag: 1e-9 }
    }

    /// `κ ∈ {1e2, 1e3, 1e4}·c1`, residual target `1e-10` on `det ∇y − 1`, flagged above `1e-6`.
    pub fn for_nonlinear(c1: f64) -> PenaltySchedule {
        PenaltySchedule { kappa0: 1e2 * c1, factor: 10.0, stages: 3, max_updates: 100, target: 1e-10, flag: 1e-6 }
    }
}

impl PenaltySchedule {
    fn finished(&self, update: usize, residual: f64, previous: f64) -> bool {
        update + 1 >= self.stages && (residual <= self.target || residual > STAGNATION * previous)
    }
}

const STAGNATION: f64 = 0.9;

/// One start of a multistart solve.
#[derive(Debug, Clone, PartialEq)]
pub struct StartOutcome {
    pub label: String,
    pub objective: f64,
    pub residual: f64,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    /// Displacement `u` for limit problems, deformation `y` for `G_h^I`.
    pub minimizer: Vec<Vector3<f64>>,
    /// The functional recomputed at `minimizer`.
    pub objective: f64,
    /// The value the solver minimized (penalty terms removed).
    pub solver_value: f64,
    /// `max_e |div u|` or `max_e |det ∇y − 1|`.
    pub constraint_residual: f64,
    pub active_nodes: Vec<usize>,
    pub iterations: usize,
    pub outer_iterations: usize,
    pub termination: Termination,
    /// Objective after each accepted step, one trace per inner solve.
    pub traces: Vec<Vec<f64>>,
    /// Maximizer of `L(R u)` over the kernel at the minimizer (limit problems).
    pub rotation: Rotation,
    /// Optimal shear `b*` (for `G̃^I`).
    pub shear: Option<[f64; 2]>,
    pub kappa: f64,
    pub feasible: bool,
    /// Grid angles whose subproblem attained the minimum value (non-unique minimizers).
    pub equal_value_angles: Vec<f64>,
    pub starts: Vec<StartOutcome>,
}
