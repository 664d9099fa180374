//! The four experiment drivers behind the command line: load check, limit
//! problems, recovery sequence and the full `h` sweep.

use std::fmt::Write as _;

use nalgebra::Vector3;

use super::config::{AdmissibilityMode, Continuation, ExperimentConfig};
use super::records::{
    convergence_verdict, default_tolerance, emit_outputs, fit_slack, ConvergenceRecord, ConvergenceVerdict, SlackFit,
};
use crate::error::{LabError, Result};
use crate::geometry::{extract_obstacle, h1_norm, l2_norm, nodal_l2_squared, Mesh, ObstacleSet};
use crate::kinematics::{
    extract_displacement, optimal_rotation, translations, write_field, DeformationField, DisplacementField,
};
use crate::loads::{
    kernel_decision, phi, verify_global_admissibility, AdmissibilityReport, KernelClass, KernelDecision, Load,
};
use crate::material::MaterialModel;
use crate::recovery::{
    build_recovery_sequence, verify_upper_bound, FlowOptions, RecoveryOptions, RecoverySequence, UpperBoundReport,
};
use crate::solvers::{
    minimize_limit, minimize_nonlinear, optimal_shear_b, tilde_lift, EngineOptions, LimitVariant, Multistart,
    NonlinearProblem, PenaltySchedule, QuadraticProblem, SolveResult,
};

/// Accepted `|min G^I − min G̃^I|` and slack in the ordering checks.
pub const LIMIT_AGREEMENT: f64 = 1e-8;

/// Grid size of the kernel cross-check.
const KERNEL_GRID: usize = 720;

/// Mesh, material, load and obstacle built from a config, with the load checks.
#[derive(Debug, Clone)]
pub struct Setup {
    pub mesh: Mesh,
    pub material: MaterialModel,
    pub load: Load,
    pub obstacle: ObstacleSet,
    pub admissibility: AdmissibilityReport,
    pub kernel: KernelDecision,
    /// The load vanishes: every energy is zero and minimizers are not unique.
    pub degenerate: bool,
}

impl Setup {
    pub fn violations(&self) -> Vec<String> {
        self.admissibility.violations().iter().map(|v| v.to_string()).collect()
    }
}

/// Builds the problem data. Fails if `L(e₃) ≤ 0` is violated, and in strict
/// mode on any other admissibility violation.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Setup> {
    cfg.validate()?;
    let mesh = cfg.domain.build()?;
    let material = cfg.material_model()?;
    let load = Load::new(&cfg.load, &mesh)?;
    let obstacle = extract_obstacle(&mesh)?;
    let admissibility = verify_global_admissibility(&load, &obstacle, cfg.admissibility_budget, cfg.seed);
    if let Some(v) = admissibility.basic_violations().iter().find(|v| v.condition.starts_with("L(e₃)")) {
        return Err(LabError::Inadmissible(v.to_string()));
    }
    if cfg.admissibility == AdmissibilityMode::Strict {
        if let Some(v) = admissibility.violations().first() {
            return Err(LabError::Inadmissible(v.to_string()));
        }
    }
    let degenerate = load.norm_estimate() == 0.0;
    let kernel = if degenerate {
        KernelDecision {
            class: KernelClass::RotationsAboutE3,
            grid_max_abs_phi: 0.0,
            grid_points: 0,
            closed_form: 0.0,
            agree: true,
        }
    } else {
        kernel_decision(&load, &obstacle, KERNEL_GRID)?
    };
    Ok(Setup { mesh, material, load, obstacle, admissibility, kernel, degenerate })
}

fn schedule(base: PenaltySchedule, c: Option<Continuation>) -> PenaltySchedule {
    match c {
        Some(c) => PenaltySchedule { kappa0: c.kappa0, factor: c.factor, stages: c.stages, ..base },
        None => base,
    }
}

fn engine_options(cfg: &ExperimentConfig) -> EngineOptions {
    EngineOptions { max_iter: cfg.max_iter, tol: cfg.solver_tol, ..EngineOptions::default() }
}

/// Minima of `E^I`, `G^I` and `G̃^I` on the mesh.
#[derive(Debug, Clone)]
pub struct LimitSummary {
    pub e: SolveResult,
    pub g: SolveResult,
    pub gtilde: SolveResult,
}

impl LimitSummary {
    pub fn min_e(&self) -> f64 {
        self.e.objective
    }

    pub fn min_g(&self) -> f64 {
        self.g.objective
    }

    pub fn min_gtilde(&self) -> f64 {
        self.gtilde.objective
    }

    pub fn equality_gap(&self) -> f64 {
        (self.min_g() - self.min_gtilde()).abs()
    }

    pub fn limits_agree(&self) -> bool {
        self.equality_gap() <= LIMIT_AGREEMENT
    }

    /// `min G̃^I ≤ min G^I ≤ min E^I` up to [`LIMIT_AGREEMENT`].
    pub fn ordered(&self) -> bool {
        self.min_gtilde() <= self.min_g() + LIMIT_AGREEMENT && self.min_g() <= self.min_e() + LIMIT_AGREEMENT
    }

    /// The `G̃^I` minimizer as a displacement field.
    pub fn limit_displacement(&self, mesh: &Mesh) -> Result<DisplacementField> {
        DisplacementField::new(mesh, self.gtilde.minimizer.clone())
    }
}

pub fn solve_limits(setup: &Setup, cfg: &ExperimentConfig) -> Result<LimitSummary> {
    let solve = |variant| {
        let p = QuadraticProblem::new(
            &setup.mesh,
            &setup.material,
            &setup.load,
            &setup.obstacle,
            variant,
            Some(setup.kernel.class),
        )?;
        let base = p.schedule;
        minimize_limit(&p.with_schedule(schedule(base, cfg.penalty)).with_options(engine_options(cfg)))
    };
    Ok(LimitSummary { e: solve(LimitVariant::EI)?, g: solve(LimitVariant::GI)?, gtilde: solve(LimitVariant::GTildeI)? })
}

/// Outcome of the nonlinear solve at one `h`.
#[derive(Debug, Clone)]
pub enum SweepEntry {
    Solved(ConvergenceRecord),
    Failed { h: f64, message: String },
}

/// Diagnostics of a nonlinear minimizer `y` at step size `h`.
pub fn make_record(
    h: f64,
    result: &SolveResult,
    setup: &Setup,
    min_gtilde: f64,
    reference: &DisplacementField,
) -> Result<ConvergenceRecord> {
    let mesh = &setup.mesh;
    let y = DeformationField::new(mesh, result.minimizer.clone())?;
    let fit = optimal_rotation(&y, mesh);
    let r = fit.rotation;
    let c = translations(&y, &r, &setup.obstacle, mesh)?;
    let vertical: Vec<f64> = y.nodal().iter().zip(mesh.nodes()).map(|(yi, x)| (yi - r.matrix() * x - c).z).collect();
    let t_j = nodal_l2_squared(mesh, &vertical)?.sqrt() / h;
    let u = extract_displacement(&y, &r, &c, h, mesh)?;
    let diff: Vec<Vector3<f64>> = u.nodal().iter().zip(reference.nodal()).map(|(a, b)| a - b).collect();
    let (axis, angle) = r.axis_angle();
    Ok(ConvergenceRecord {
        h,
        inf_gh: result.objective,
        gap: result.objective - min_gtilde,
        t_j,
        phi_rj: phi(&setup.load, &setup.obstacle, &r),
        det_residual: result.constraint_residual,
        active_nodes: result.active_nodes.len(),
        r_axis: axis,
        r_angle: angle,
        c,
        u_h1: h1_norm(mesh, u.nodal())?,
        u_distance: l2_norm(mesh, &diff)?,
        feasible: result.feasible,
    })
}

/// Minimizes `G_h^I` for every `h` in the config, warm-started from
/// `x + h ũ` with `ũ` the lifted limit minimizer. Solver failures are
/// recorded and the sweep continues. Entries come back in config order
/// whatever the number of worker threads.
pub fn run_sweep(setup: &Setup, cfg: &ExperimentConfig, limits: &LimitSummary) -> Result<Vec<SweepEntry>> {
    let reference = limits.limit_displacement(&setup.mesh)?;
    let shear = limits.gtilde.shear.map(|[a, b]| nalgebra::Vector2::new(a, b));
    let lifted = match shear {
        Some(b) => tilde_lift(&reference, &b, &setup.mesh)?,
        None => tilde_lift(&reference, &optimal_shear_b(&reference, &setup.material, &setup.mesh)?, &setup.mesh)?,
    };
    let solve_one = |h: f64| -> SweepEntry {
        let run = || -> Result<ConvergenceRecord> {
            let p = match cfg.admissibility {
                AdmissibilityMode::Strict => {
                    NonlinearProblem::new(&setup.mesh, &setup.material, &setup.load, &setup.obstacle, h)?
                }
                AdmissibilityMode::Reference => {
                    NonlinearProblem::reference_branch(&setup.mesh, &setup.material, &setup.load, &setup.obstacle, h)?
                }
            };
            let warm = setup.mesh.nodes().iter().zip(lifted.nodal()).map(|(x, u)| x + u * h).collect();
            let multistart = Multistart {
                seed: cfg.multistart_seed.unwrap_or(cfg.seed),
                noisy_starts: cfg.noisy_starts,
                warm_start: Some(warm),
                ..Multistart::default()
            };
            let base = p.schedule;
            let p = p
                .with_schedule(schedule(base, cfg.continuation))
                .with_options(engine_options(cfg))
                .with_multistart(multistart);
            let result = minimize_nonlinear(&p)?;
            make_record(h, &result, setup, limits.min_gtilde(), &reference)
        };
        match run() {
            Ok(r) => SweepEntry::Solved(r),
            Err(e) => SweepEntry::Failed { h, message: e.to_string() },
        }
    };

    let threads = cfg.threads.min(cfg.h_list.len()).max(1);
    let mut slots: Vec<Option<SweepEntry>> = vec![None; cfg.h_list.len()];
    std::thread::scope(|scope| {
        let workers: Vec<_> = (0..threads)
            .map(|w| {
                let solve_one = &solve_one;
                let h_list = &cfg.h_list;
                scope.spawn(move || {
                    (w..h_list.len()).step_by(threads).map(|i| (i, solve_one(h_list[i]))).collect::<Vec<_>>()
                })
            })
            .collect();
        for worker in workers {
            for (i, entry) in worker.join().expect("sweep worker panicked") {
                slots[i] = Some(entry);
            }
        }
    });
    Ok(slots.into_iter().map(|s| s.expect("every h solved")).collect())
}

pub fn solved_records(entries: &[SweepEntry]) -> Vec<ConvergenceRecord> {
    entries
        .iter()
        .filter_map(|e| match e {
            SweepEntry::Solved(r) => Some(r.clone()),
            SweepEntry::Failed { .. } => None,
        })
        .collect()
}

/// Ordering of the limit minima and lower bounds along the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub min_gtilde: f64,
    pub min_g: f64,
    pub min_e: f64,
    pub ordered: bool,
    pub limits_agree: bool,
    /// `min_j inf G_{h_j}^I`.
    pub lower_bound: f64,
    /// Largest `min G̃^I − inf_Gh` over the sweep (negative when every value lies above).
    pub max_deficit: f64,
    pub slack: Option<SlackFit>,
    pub slack_vanishes: bool,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.ordered && self.limits_agree && self.lower_bound.is_finite() && self.slack_vanishes
    }
}

/// `min G̃^I ≤ min G^I ≤ min E^I`, a finite lower bound on the sweep and a
/// slack `inf_Gh ≥ min G̃^I − C h^p` with `p > 0`. With fewer than two
/// values below `min G̃^I` no fit is made and the single deficit, if any,
/// must stay within `tolerance`.
pub fn sandwich_check(limits: &LimitSummary, records: &[ConvergenceRecord], tolerance: f64) -> SandwichReport {
    let min_gtilde = limits.min_gtilde();
    let lower_bound = records.iter().map(|r| r.inf_gh).fold(f64::INFINITY, f64::min);
    let max_deficit = records.iter().map(|r| min_gtilde - r.inf_gh).fold(f64::NEG_INFINITY, f64::max);
    let slack = fit_slack(records, min_gtilde);
    let slack_vanishes = match slack {
        Some(fit) => fit.exponent > 0.0,
        None => max_deficit <= tolerance,
    };
    SandwichReport {
        min_gtilde,
        min_g: limits.min_g(),
        min_e: limits.min_e(),
        ordered: limits.ordered(),
        limits_agree: limits.limits_agree(),
        lower_bound,
        max_deficit,
        slack,
        slack_vanishes,
    }
}

/// Recovery sequence from the `G̃^I` minimizer and its upper-bound check.
#[derive(Debug, Clone)]
pub struct RecoveryOutcome {
    pub sequence: RecoverySequence,
    pub upper: UpperBoundReport,
}

impl RecoveryOutcome {
    pub fn passed(&self) -> bool {
        self.upper.passed() && self.sequence.steps.iter().all(|s| s.ledger.violations() == 0)
    }
}

pub fn run_recovery(setup: &Setup, cfg: &ExperimentConfig, limits: &LimitSummary) -> Result<RecoveryOutcome> {
    let rc = cfg.recovery.ok_or_else(|| LabError::InvalidInput("config has no 'recovery' line".into()))?;
    let defaults = RecoveryOptions::default();
    let opts = RecoveryOptions {
        gamma: rc.gamma,
        flow: FlowOptions { steps: rc.steps_per_h, ledger_samples: rc.ledger_samples, ..defaults.flow },
        ..defaults
    };
    let u = limits.limit_displacement(&setup.mesh)?;
    let h_list = cfg.recovery_h.as_deref().unwrap_or(&cfg.h_list);
    let sequence = build_recovery_sequence(
        &u,
        &setup.mesh,
        &setup.material,
        &setup.load,
        &setup.obstacle,
        setup.kernel.class,
        h_list,
        &opts,
    )?;
    let upper = verify_upper_bound(&sequence, limits.min_gtilde(), &setup.mesh, &setup.material, &setup.load)?;
    Ok(RecoveryOutcome { sequence, upper })
}

/// Everything produced by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub setup: Setup,
    pub limits: LimitSummary,
    pub entries: Vec<SweepEntry>,
    pub verdict: Option<ConvergenceVerdict>,
    pub sandwich: SandwichReport,
    pub recovery: Option<std::result::Result<RecoveryOutcome, String>>,
}

impl ExperimentReport {
    pub fn records(&self) -> Vec<ConvergenceRecord> {
        solved_records(&self.entries)
    }

    /// Convergence verdict, sandwich checks and, when requested, the upper bound.
    pub fn passed(&self) -> bool {
        let recovery_ok = match &self.recovery {
            None => true,
            Some(Ok(r)) => r.passed(),
            Some(Err(_)) => false,
        };
        self.verdict.as_ref().is_some_and(|v| v.passed()) && self.sandwich.passed() && recovery_ok
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        render_setup(&mut out, &self.setup);
        render_limits(&mut out, &self.limits);
        let _ = writeln!(out, "\nsweep");
        let _ = writeln!(
            out,
            "  {:>10} {:>20} {:>13} {:>11} {:>11} {:>10} {:>6} {:>10} {:>10} {:>8}",
            "h", "inf_Gh", "gap", "t_j", "phi(R_j)", "det_res", "active", "|u_j|_H1", "|u_j-u|", "feasible"
        );
        for e in &self.entries {
            match e {
                SweepEntry::Solved(r) => {
                    let _ = writeln!(
                        out,
                        "  {:>10.4e} {:>20.12e} {:>13.5e} {:>11.4e} {:>11.3e} {:>10.3e} {:>6} {:>10.4e} {:>10.4e} {:>8}",
                        r.h,
                        r.inf_gh,
                        r.gap,
                        r.t_j,
                        r.phi_rj,
                        r.det_residual,
                        r.active_nodes,
                        r.u_h1,
                        r.u_distance,
                        if r.feasible { "yes" } else { "no" }
                    );
                }
                SweepEntry::Failed { h, message } => {
                    let _ = writeln!(out, "  {h:>10.4e} failed: {message}");
                }
            }
        }
        let s = &self.sandwich;
        let _ = writeln!(out, "\nsandwich");
        let _ = writeln!(out, "  ordering G~ <= G <= E: {}", yes_no(s.ordered));
        let _ = writeln!(out, "  |min G - min G~| <= {LIMIT_AGREEMENT:e}: {}", yes_no(s.limits_agree));
        let _ = writeln!(out, "  lower bound over the sweep: {:.12e}", s.lower_bound);
        let _ = writeln!(out, "  largest deficit below min G~: {:.6e}", s.max_deficit);
        match s.slack {
            Some(fit) => {
                let _ = writeln!(out, "  slack fit: {:.4e} h^{:.4}", fit.coefficient, fit.exponent);
            }
            None => {
                let _ = writeln!(out, "  slack fit: fewer than two deficits");
            }
        }
        let _ = writeln!(out, "  slack vanishes: {}", yes_no(s.slack_vanishes));
        let _ = writeln!(out, "\nconvergence");
        match &self.verdict {
            Some(v) => {
                let tail: Vec<String> = v.tail.iter().map(|g| format!("{g:.6e}")).collect();
                let _ = writeln!(out, "  positive gaps over the last h values: {}", tail.join(", "));
                let _ = writeln!(out, "  nonincreasing: {}", yes_no(v.nonincreasing));
                let _ = writeln!(
                    out,
                    "  final gap {:.6e} <= {:.6e}: {}",
                    v.final_gap,
                    v.tolerance,
                    yes_no(v.final_gap <= v.tolerance)
                );
            }
            None => {
                let _ = writeln!(out, "  no successful solves");
            }
        }
        match &self.recovery {
            None => {}
            Some(Ok(r)) => render_recovery(&mut out, r),
            Some(Err(e)) => {
                let _ = writeln!(out, "\nrecovery\n  failed: {e}");
            }
        }
        let _ = writeln!(out, "\nverdict: {}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn render_setup(out: &mut String, setup: &Setup) {
    let a = &setup.admissibility;
    let _ = writeln!(out, "setup");
    let _ = writeln!(out, "  mesh: {} nodes, {} elements", setup.mesh.num_nodes(), setup.mesh.num_elements());
    let [c1, c2, c3] = setup.material.coefficients();
    let _ = writeln!(out, "  material: yeoh {c1} {c2} {c3}");
    let _ = writeln!(out, "  obstacle nodes: {}", setup.obstacle.node_indices.len());
    let _ = writeln!(out, "  L(e1) = {:.6e}, L(e2) = {:.6e}, L(e3) = {:.6e}", a.l_e1, a.l_e2, a.l_e3);
    let _ = writeln!(out, "  L(e3^x) = {:.6e}, L(e3^(e3^x)) = {:.6e}", a.torque_about_e3, a.planar_compression);
    let _ = writeln!(out, "  worst sampled Phi = {:.6e}, worst shear = {:.6e}", a.worst_phi, a.worst_shear);
    let k = &setup.kernel;
    let _ = writeln!(
        out,
        "  kernel: {} (grid max |Phi| {:.3e}, L(x1 e1 + x2 e2) = {:.6e}, agree {})",
        k.class.name(),
        k.grid_max_abs_phi,
        k.closed_form,
        yes_no(k.agree)
    );
    if let Some(c) = &a.load_center {
        let _ = writeln!(out, "  load center: ({:.6}, {:.6}), interior {}", c.point.x, c.point.y, yes_no(c.interior));
    }
    let violations = setup.violations();
    if violations.is_empty() {
        let _ = writeln!(out, "  admissibility: all conditions hold ({} sampled rotations, seed {})", a.budget, a.seed);
    } else {
        for v in violations {
            let _ = writeln!(out, "  admissibility: {v}");
        }
    }
    if setup.degenerate {
        let _ = writeln!(out, "  degenerate: zero load, minimizers are not unique");
    }
}

pub fn render_limits(out: &mut String, limits: &LimitSummary) {
    let _ = writeln!(out, "\nlimit problems");
    for (name, r) in [("E^I", &limits.e), ("G^I", &limits.g), ("G~^I", &limits.gtilde)] {
        let _ = writeln!(
            out,
            "  min {:<5} = {:>20.12e}  (div residual {:.2e}, active nodes {}, {})",
            name,
            r.objective,
            r.constraint_residual,
            r.active_nodes.len(),
            r.termination.name()
        );
    }
    if let Some([b1, b2]) = limits.gtilde.shear {
        let _ = writeln!(out, "  optimal shear b* = ({b1:.6e}, {b2:.6e})");
    }
    let (axis, angle) = limits.gtilde.rotation.axis_angle();
    let _ = writeln!(out, "  kernel maximizer: angle {angle:.6} about ({:.4}, {:.4}, {:.4})", axis.x, axis.y, axis.z);
    let _ = writeln!(out, "  |min G - min G~| = {:.3e}", limits.equality_gap());
    if !limits.gtilde.equal_value_angles.is_empty() {
        let _ = writeln!(
            out,
            "  minimizer not unique: {} grid angles attain the minimum",
            limits.gtilde.equal_value_angles.len()
        );
    }
}

pub fn render_recovery(out: &mut String, r: &RecoveryOutcome) {
    let seq = &r.sequence;
    let _ = writeln!(out, "\nrecovery");
    let _ = writeln!(
        out,
        "  gamma {}, length scale {:.4e}, lift {}, Holder norm {:.4e} (resolution {:.3e})",
        seq.gamma,
        seq.length_scale,
        seq.lift.name(),
        seq.holder.norm(),
        seq.holder.resolution
    );
    let _ = writeln!(
        out,
        "  {:>10} {:>10} {:>11} {:>11} {:>20} {:>11} {:>11} {:>6} {:>10} {:>9}",
        "h", "eps", "beta", "beta_apr", "energy", "gap", "error_bar", "steps", "det_res", "ledger"
    );
    for (row, step) in r.upper.rows.iter().zip(&seq.steps) {
        let _ = writeln!(
            out,
            "  {:>10.4e} {:>10.4e} {:>11.4e} {:>11.4e} {:>20.12e} {:>11.4e} {:>11.3e} {:>6} {:>10.3e} {:>4}/{:<5}",
            row.h,
            row.eps,
            step.beta,
            step.beta_apriori,
            row.energy,
            row.gap,
            row.error_bar,
            step.flow_steps,
            step.det_residual,
            step.ledger.violations(),
            step.ledger.checks()
        );
    }
    let _ = writeln!(out, "  target G~^I(u) = {:.12e}", r.upper.target);
    let _ = writeln!(out, "  positive gap nonincreasing: {}", yes_no(r.upper.nonincreasing));
    let _ = writeln!(
        out,
        "  final gap {:.6e} <= {:.6e}: {}",
        r.upper.final_gap,
        r.upper.tolerance,
        yes_no(r.upper.final_gap <= r.upper.tolerance)
    );
    let _ = writeln!(out, "  upper bound: {}", if r.passed() { "PASS" } else { "FAIL" });
}

/// Limit problems, `h` sweep, sandwich and convergence checks, and the
/// optional recovery sequence; writes `sweep.csv` and `report.txt` when at
/// least one `h` was solved.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let setup = prepare(cfg)?;
    let limits = solve_limits(&setup, cfg)?;
    let entries = run_sweep(&setup, cfg, &limits)?;
    let records = solved_records(&entries);
    let tolerance = cfg.tolerance.unwrap_or_else(|| default_tolerance(limits.min_gtilde()));
    let verdict = convergence_verdict(&records, tolerance).ok();
    let sandwich = sandwich_check(&limits, &records, tolerance);
    let recovery = cfg.recovery.map(|_| run_recovery(&setup, cfg, &limits).map_err(|e| e.to_string()));
    let report = ExperimentReport { setup, limits, entries, verdict, sandwich, recovery };
    if !records.is_empty() {
        emit_outputs(&records, &report.render(), &cfg.output)?;
    }
    Ok(report)
}

/// Limit minima with the ordering check; writes the `G̃^I` minimizer to
/// `limit.field` and the summary to `limit.txt`.
pub fn run_limit(cfg: &ExperimentConfig) -> Result<(Setup, LimitSummary, String)> {
    let setup = prepare(cfg)?;
    let limits = solve_limits(&setup, cfg)?;
    let mut text = String::new();
    render_setup(&mut text, &setup);
    render_limits(&mut text, &limits);
    let _ = writeln!(text, "  ordering G~ <= G <= E: {}", yes_no(limits.ordered()));
    let _ = writeln!(text, "\nverdict: {}", if limits.ordered() && limits.limits_agree() { "PASS" } else { "FAIL" });
    std::fs::create_dir_all(&cfg.output)?;
    write_field(&limits.gtilde.minimizer, &cfg.output.join("limit.field"))?;
    std::fs::write(cfg.output.join("limit.txt"), &text)?;
    Ok((setup, limits, text))
}

/// Recovery sequence from the `G̃^I` minimizer; writes `recovery.txt`.
pub fn run_recover(cfg: &ExperimentConfig) -> Result<(RecoveryOutcome, String)> {
    let setup = prepare(cfg)?;
    let limits = solve_limits(&setup, cfg)?;
    let outcome = run_recovery(&setup, cfg, &limits)?;
    let mut text = String::new();
    render_setup(&mut text, &setup);
    render_limits(&mut text, &limits);
    render_recovery(&mut text, &outcome);
    std::fs::create_dir_all(&cfg.output)?;
    std::fs::write(cfg.output.join("recovery.txt"), &text)?;
    Ok((outcome, text))
}

/// Admissibility report and kernel class without solving anything.
pub fn check_load(cfg: &ExperimentConfig) -> Result<(Setup, String)> {
    let lenient = ExperimentConfig { admissibility: AdmissibilityMode::Reference, ..cfg.clone() };
    let setup = prepare(&lenient)?;
    let mut text = String::new();
    render_setup(&mut text, &setup);
    let ok = setup.admissibility.is_admissible() && setup.kernel.agree;
    let _ = writeln!(text, "\nverdict: {}", if ok { "PASS" } else { "FAIL" });
    Ok((setup, text))
}
