//! Recovery sequences `y_h = R̃ z(h, ·) + β_h e3` built from a limit
//! displacement, and the measured upper-bound gap `G_h^I(y_h) − G̃^I(u)`.

use nalgebra::{Matrix3, Vector2, Vector3};

use super::extension::BoxExtension;
use super::fields::VectorField;
use super::flow::{flow_points, BoundLedger, FlowOptions};
use super::mollifier::{holder_estimate, mollify, HolderEstimate, MollifyOptions, SmoothFieldNorms, MOLLIFIER_K};
use crate::error::{LabError, Result};
use crate::geometry::{Mesh, ObstacleSet};
use crate::kinematics::{DeformationField, DisplacementField};
use crate::loads::{KernelClass, Load, Rotation};
use crate::material::{incompressible_energy, EnergyMode, MaterialModel};
use crate::solvers::{max_load_over_kernel, optimal_shear_b, tilde_lift};

/// Largest `|div u|` accepted as input.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-9;

/// How the vertical lift `β_h` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftPolicy {
    /// `β_h = h N (ε^γ + exp(K h ε⁻¹ N) − 1)` with `N = ‖ũ‖_{0,γ}`.
    APriori,
    /// The least `β ≥ 0` making `y_3 ≥ 0` at every obstacle node.
    Measured,
}

impl LiftPolicy {
    pub fn name(self) -> &'static str {
        match self {
            LiftPolicy::APriori => "apriori",
            LiftPolicy::Measured => "measured",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryOptions {
    pub gamma: f64,
    /// `ℓ` in `ε_h = ℓ h^{γ/2}`; `None` uses half the smallest element inradius.
    pub length_scale: Option<f64>,
    pub lift: LiftPolicy,
    pub flow: FlowOptions,
    pub mollify: MollifyOptions,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions {
            gamma: 0.25,
            length_scale: None,
            lift: LiftPolicy::Measured,
            flow: FlowOptions { ledger_samples: 64, ..FlowOptions::default() },
            mollify: MollifyOptions::default(),
        }
    }
}

/// One member `y_h` of the sequence.
#[derive(Debug, Clone)]
pub struct RecoveryStep {
    pub h: f64,
    pub eps: f64,
    pub beta: f64,
    pub beta_apriori: f64,
    pub deformation: DeformationField,
    /// `∇y = R̃ ∇z(h, ·)` at each element centroid.
    pub centroid_gradients: Vec<Matrix3<f64>>,
    /// `y` at each load quadrature point.
    pub load_images: Vec<Vector3<f64>>,
    pub flow_steps: usize,
    pub flow_converged: bool,
    pub richardson_error: f64,
    /// `max |det ∇y − 1|` at the centroids.
    pub det_residual: f64,
    /// `max |det ∇y − 1|` of the P1 interpolant of the nodal `y`.
    pub nodal_det_residual: f64,
    pub min_obstacle_height: f64,
    pub field: SmoothFieldNorms,
    pub ledger: BoundLedger,
}

#[derive(Debug, Clone)]
pub struct RecoverySequence {
    pub shear: Vector2<f64>,
    pub rotation: Rotation,
    pub lifted: DisplacementField,
    pub holder: HolderEstimate,
    pub length_scale: f64,
    pub gamma: f64,
    pub lift: LiftPolicy,
    pub steps: Vec<RecoveryStep>,
}

/// Half the smallest inradius over the elements, `r = 1 / Σ_a |∇λ_a|`.
pub fn default_length_scale(mesh: &Mesh) -> f64 {
    0.5 * mesh
        .gradient_maps()
        .iter()
        .map(|g| 1.0 / g.column_iter().map(|c| c.norm()).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// `β_h = h N (ε^γ + exp(K h ε⁻¹ N) − 1)`.
pub fn apriori_lift(h: f64, eps: f64, holder_norm: f64, gamma: f64) -> f64 {
    h * holder_norm * (eps.powf(gamma) + (MOLLIFIER_K * h * holder_norm / eps).exp_m1())
}

#[allow(clippy::too_many_arguments)]
pub fn build_recovery_sequence(
    u: &DisplacementField,
    mesh: &Mesh,
    material: &MaterialModel,
    load: &Load,
    obstacle: &ObstacleSet,
    kernel: KernelClass,
    h_list: &[f64],
    opts: &RecoveryOptions,
) -> Result<RecoverySequence> {
    mesh.check_nodal(u.nodal().len())?;
    if let Some(h) = h_list.iter().find(|h| !(**h > 0.0 && **h < 1.0)) {
        return Err(LabError::InvalidInput(format!("h must lie in (0, 1), got {h}")));
    }
    if h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(LabError::InvalidInput("h values must be strictly decreasing".into()));
    }
    let div = u.max_abs_divergence();
    if div > DIVERGENCE_TOLERANCE {
        return Err(LabError::InvalidInput(format!("displacement is not divergence free: max |div u| = {div:e}")));
    }
    if let Some(&i) = obstacle.node_indices.iter().find(|&&i| u.nodal()[i].z < -1e-12) {
        return Err(LabError::InvalidInput(format!("displacement violates u3 >= 0 at obstacle node {i}")));
    }
    let shear = optimal_shear_b(u, material, mesh)?;
    let lifted = tilde_lift(u, &shear, mesh)?;
    let (_, rotation) = max_load_over_kernel(&lifted, load, kernel)?;
    let extension = BoxExtension::new(&lifted, mesh, None)?;
    let mopts = MollifyOptions { gamma: opts.gamma, ..opts.mollify };
    let (lo, hi) = extension.domain().expect("extensions live on a box");
    let holder = holder_estimate(&extension, &lo, &hi, mopts.probes_per_axis, mopts.pair_levels, opts.gamma)?;
    let length_scale = opts.length_scale.unwrap_or_else(|| default_length_scale(mesh));

    let nn = mesh.num_nodes();
    let ne = mesh.num_elements();
    let mut points = mesh.nodes().to_vec();
    points.extend((0..ne).map(|e| mesh.centroid(e)));
    points.extend(load.points().iter().map(|p| p.x));

    let r = *rotation.matrix();
    let mut steps = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let eps = length_scale * h.powf(0.5 * opts.gamma);
        let field = mollify(&extension, eps, &mopts)?;
        let norms = *field.norms();
        let flow_opts = FlowOptions { norms: Some((norms.sup_value, norms.sup_gradient)), ..opts.flow };
        let flow = flow_points(&field, h, &points, &flow_opts)?;
        let beta_apriori = apriori_lift(h, eps, holder.norm(), opts.gamma);
        let lowest = obstacle.node_indices.iter().map(|&i| flow.positions[i].z).fold(f64::INFINITY, f64::min);
        let beta = match opts.lift {
            LiftPolicy::APriori => beta_apriori,
            LiftPolicy::Measured => (-lowest).max(0.0),
        };
        let lift = Vector3::new(0.0, 0.0, beta);
        let nodal: Vec<Vector3<f64>> = flow.positions[..nn].iter().map(|z| r * z + lift).collect();
        let min_obstacle_height = obstacle.node_indices.iter().map(|&i| nodal[i].z).fold(f64::INFINITY, f64::min);
        if let Some(&i) = obstacle.node_indices.iter().find(|&&i| nodal[i].z < -1e-12) {
            return Err(LabError::RecoveryAdmissibility { node: i, value: nodal[i].z });
        }
        let centroid_gradients: Vec<Matrix3<f64>> = flow.jacobians[nn..nn + ne].iter().map(|z| r * z).collect();
        let det_residual = centroid_gradients.iter().map(|f| (f.determinant() - 1.0).abs()).fold(0.0, f64::max);
        if det_residual > 1e-6 {
            return Err(LabError::Infeasible { residual: det_residual });
        }
        let deformation = DeformationField::new(mesh, nodal)?;
        steps.push(RecoveryStep {
            h,
            eps,
            beta,
            beta_apriori,
            nodal_det_residual: deformation.max_det_residual(),
            deformation,
            centroid_gradients,
            load_images: flow.positions[nn + ne..].iter().map(|z| r * z + lift).collect(),
            flow_steps: flow.steps,
            flow_converged: flow.converged,
            richardson_error: flow.richardson_error,
            det_residual,
            min_obstacle_height,
            field: norms,
            ledger: flow.ledger,
        });
    }
    Ok(RecoverySequence { shear, rotation, lifted, holder, length_scale, gamma: opts.gamma, lift: opts.lift, steps })
}

/// `G_h^I(y_h)` for one member of the sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperBoundRow {
    pub h: f64,
    pub eps: f64,
    /// Strict-mode energy with each centroid gradient rescaled to unit determinant.
    pub energy: f64,
    /// `h⁻² Σ |T| |W(F_T) − W(F̂_T)|`: effect of the rescaling.
    pub error_bar: f64,
    /// The same energy with the P1 gradients of the nodal `y` (rescaled).
    pub nodal_energy: f64,
    pub gap: f64,
    pub beta_over_h: f64,
    pub beta_within_apriori: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpperBoundReport {
    pub target: f64,
    pub rows: Vec<UpperBoundRow>,
    /// Positive part of the gap nonincreasing as `h` decreases.
    pub nonincreasing: bool,
    pub final_gap: f64,
    pub tolerance: f64,
}

impl UpperBoundReport {
    pub fn passed(&self) -> bool {
        self.nonincreasing && self.final_gap.max(0.0) <= self.tolerance
    }
}

fn unit_determinant(f: &Matrix3<f64>) -> Matrix3<f64> {
    let d = f.determinant();
    if d > 0.0 {
        f / d.cbrt()
    } else {
        *f
    }
}

fn strict_energy(f: &Matrix3<f64>, material: &MaterialModel) -> f64 {
    incompressible_energy(f, material, EnergyMode::Strict).value().unwrap_or(f64::INFINITY)
}

/// Evaluates `G_h^I(y_h) = h⁻² ∫ W^I(∇y_h) − h⁻¹ L(y_h − x)` along the sequence and
/// compares with `target = G̃^I(u)`. The gap passes when its positive part is
/// nonincreasing in `h` and finally at most `1e-2 (1 + |target|)`.
pub fn verify_upper_bound(
    sequence: &RecoverySequence,
    target: f64,
    mesh: &Mesh,
    material: &MaterialModel,
    load: &Load,
) -> Result<UpperBoundReport> {
    let mut rows = Vec::with_capacity(sequence.steps.len());
    for step in &sequence.steps {
        mesh.check_elemental(step.centroid_gradients.len())?;
        let h2 = step.h * step.h;
        let (mut elastic, mut bar, mut nodal) = (0.0, 0.0, 0.0);
        for ((f, vol), g) in
            step.centroid_gradients.iter().zip(mesh.element_volumes()).zip(step.deformation.gradients())
        {
            let unit = unit_determinant(f);
            let w = strict_energy(&unit, material);
            elastic += vol * w;
            bar += vol * (crate::material::yeoh_energy(f, material) - w).abs();
            nodal += vol * strict_energy(&unit_determinant(g), material);
        }
        if step.load_images.len() != load.points().len() {
            return Err(LabError::SizeMismatch { expected: load.points().len(), got: step.load_images.len() });
        }
        let work: f64 = load.points().iter().zip(&step.load_images).map(|(p, y)| p.force.dot(&(y - p.x))).sum();
        let energy = elastic / h2 - work / step.h;
        rows.push(UpperBoundRow {
            h: step.h,
            eps: step.eps,
            energy,
            error_bar: bar / h2,
            nodal_energy: nodal / h2 - work / step.h,
            gap: energy - target,
            beta_over_h: step.beta / step.h,
            beta_within_apriori: step.beta <= step.beta_apriori,
        });
    }
    let nonincreasing = rows.windows(2).all(|w| w[1].gap.max(0.0) <= w[0].gap.max(0.0));
    let final_gap = rows.last().map_or(0.0, |r| r.gap);
    Ok(UpperBoundReport { target, rows, nonincreasing, final_gap, tolerance: 1e-2 * (1.0 + target.abs()) })
}
