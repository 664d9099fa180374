//! The limit functionals `E^I`, `G^I`, `G̃^I` and their minimization.
//!
//! `G^I(u) = ∫ Q^I(E(u)) − max_{R ∈ S} L(R u)`. For `S = {I}` this is `E^I`.
//! For `S = {rotations about e3}` the load term is a maximum of linear
//! functionals, so `G^I` is a difference of convex functions and
//! `min_u G^I = min_θ min_u [∫ Q^I(E(u)) − L(R_θ u)]`: every inner problem is a
//! convex QP, and the outer one is a scalar search over `θ`.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix6, Vector2, Vector3, Vector6};

use super::assembly::{
    divergence_row, element_divergences, gather, local_dofs, scatter_matrix, scatter_vector, strain_operator, to_field,
    to_vector, Mat12,
};
use super::engine::{minimize_bounded, EngineOptions, SmoothObjective, Termination};
use super::{PenaltySchedule, SolveResult};
use crate::error::{LabError, Result};
use crate::geometry::{Mesh, ObstacleSet};
use crate::kinematics::DisplacementField;
use crate::loads::{KernelClass, Load, Rotation};
use crate::material::MaterialModel;

/// Which limit functional to minimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitVariant {
    EI,
    GI,
    GTildeI,
}

impl LimitVariant {
    pub fn name(self) -> &'static str {
        match self {
            LimitVariant::EI => "E^I",
            LimitVariant::GI => "G^I",
            LimitVariant::GTildeI => "G~^I",
        }
    }
}

/// Grid for the scalar search over rotations about `e3`.
const THETA_GRID: usize = 24;
const GOLDEN_TOL: f64 = 1e-7;

/// A limit problem on a fixed mesh.
#[derive(Debug, Clone)]
pub struct QuadraticProblem<'a> {
    pub mesh: &'a Mesh,
    pub material: &'a MaterialModel,
    pub load: &'a Load,
    pub obstacle: &'a ObstacleSet,
    pub variant: LimitVariant,
    pub kernel: Option<KernelClass>,
    pub schedule: PenaltySchedule,
    pub options: EngineOptions,
}

impl<'a> QuadraticProblem<'a> {
    pub fn new(
        mesh: &'a Mesh,
        material: &'a MaterialModel,
        load: &'a Load,
        obstacle: &'a ObstacleSet,
        variant: LimitVariant,
        kernel: Option<KernelClass>,
    ) -> Result<QuadraticProblem<'a>> {
        if variant != LimitVariant::EI && kernel.is_none() {
            return Err(LabError::InvalidInput(format!("{} needs the kernel class of the load", variant.name())));
        }
        mesh.check_nodal(load.nodal_forces().len())?;
        Ok(QuadraticProblem {
            mesh,
            material,
            load,
            obstacle,
            variant,
            kernel,
            schedule: PenaltySchedule::for_limit(material.c1()),
            options: EngineOptions::default(),
        })
    }

    pub fn with_schedule(mut self, schedule: PenaltySchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_options(mut self, options: EngineOptions) -> Self {
        self.options = options;
        self
    }

    fn rotations_about_e3(&self) -> bool {
        self.variant != LimitVariant::EI && self.kernel == Some(KernelClass::RotationsAboutE3)
    }
}

/// Tensor used for `Q^I` inside the solvers: `ℂ^I` composed with the
/// deviatoric projection, which agrees with `Q^I` on trace-free strains and
/// is positive semidefinite everywhere.
fn solver_tensor(m: &MaterialModel) -> Matrix6<f64> {
    m.deviatoric_matrix()
}

/// Mandel vectors of the two shear modes `½(e_α ⊗ e3 + e3 ⊗ e_α)`.
fn shear_modes() -> [Vector6<f64>; 2] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [Vector6::new(0.0, 0.0, 0.0, 0.0, r, 0.0), Vector6::new(0.0, 0.0, 0.0, r, 0.0, 0.0)]
}

/// `∫ Q^I(E(u))`, evaluated through the deviatoric extension.
pub fn limit_elastic_energy(u: &DisplacementField, m: &MaterialModel, mesh: &Mesh) -> f64 {
    let c = solver_tensor(m);
    u.strains().iter().zip(mesh.element_volumes()).map(|(e, v)| 0.5 * v * e.mandel().dot(&(c * e.mandel()))).sum()
}

/// `min_b ∫ Q^I(E(u) + ½ b_α (e_α ⊗ e3 + e3 ⊗ e_α))` from the 2×2 stationarity system.
pub fn optimal_shear_b(u: &DisplacementField, m: &MaterialModel, mesh: &Mesh) -> Result<Vector2<f64>> {
    mesh.check_elemental(u.strains().len())?;
    let c = solver_tensor(m);
    let s = shear_modes();
    let volume = mesh.volume();
    let a = Matrix2::from_fn(|i, j| volume * s[i].dot(&(c * s[j])));
    let mut r = Vector2::zeros();
    for (e, v) in u.strains().iter().zip(mesh.element_volumes()) {
        let ce = c * e.mandel();
        r += Vector2::new(s[0].dot(&ce), s[1].dot(&ce)) * *v;
    }
    let chol = a.cholesky().ok_or_else(|| LabError::Solver("shear system is not positive definite".into()))?;
    Ok(-chol.solve(&r))
}

/// `ũ = u + x3 (b1 e1 + b2 e2)`.
pub fn tilde_lift(u: &DisplacementField, b: &Vector2<f64>, mesh: &Mesh) -> Result<DisplacementField> {
    mesh.check_nodal(u.nodal().len())?;
    let nodal = u.nodal().iter().zip(mesh.nodes()).map(|(ui, x)| ui + Vector3::new(b.x, b.y, 0.0) * x.z).collect();
    DisplacementField::new(mesh, nodal)
}

/// `I^I(u)`: the elastic energy after the optimal shear.
pub fn relaxed_elastic_energy(u: &DisplacementField, m: &MaterialModel, mesh: &Mesh) -> Result<f64> {
    let b = optimal_shear_b(u, m, mesh)?;
    Ok(limit_elastic_energy(&tilde_lift(u, &b, mesh)?, m, mesh))
}

/// `max_{R ∈ S} L(R u)` with the maximizing rotation.
///
/// For rotations about `e3`, `L(R_θ u) = a cos θ + b sin θ + c` with
/// `a = L(u1 e1 + u2 e2)`, `b = L(u1 e2 − u2 e1)`, `c = L(u3 e3)`; the maximum
/// `c + √(a² + b²)` is attained at `θ = atan2(b, a)`, and at `θ = 0` when
/// `a = b = 0`.
pub fn max_load_over_kernel(u: &DisplacementField, load: &Load, kernel: KernelClass) -> Result<(f64, Rotation)> {
    let forces = load.nodal_forces();
    if forces.len() != u.nodal().len() {
        return Err(LabError::SizeMismatch { expected: forces.len(), got: u.nodal().len() });
    }
    match kernel {
        KernelClass::IdentityOnly => Ok((load.apply(u.nodal())?, Rotation::identity())),
        KernelClass::RotationsAboutE3 => {
            let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
            for (f, v) in forces.iter().zip(u.nodal()) {
                a += f.x * v.x + f.y * v.y;
                b += f.y * v.x - f.x * v.y;
                c += f.z * v.z;
            }
            let radius = a.hypot(b);
            let theta = if radius > 0.0 { b.atan2(a) } else { 0.0 };
            Ok((c + radius, Rotation::about_e3(theta)))
        }
    }
}

/// Value of a limit functional at `u`, without the constraint check.
pub fn evaluate_limit(
    variant: LimitVariant,
    u: &DisplacementField,
    m: &MaterialModel,
    load: &Load,
    kernel: Option<KernelClass>,
    mesh: &Mesh,
) -> Result<f64> {
    let elastic = match variant {
        LimitVariant::GTildeI => relaxed_elastic_energy(u, m, mesh)?,
        _ => limit_elastic_energy(u, m, mesh),
    };
    let kernel = match variant {
        LimitVariant::EI => KernelClass::IdentityOnly,
        _ => kernel.ok_or_else(|| LabError::InvalidInput(format!("{} needs the kernel class", variant.name())))?,
    };
    Ok(elastic - max_load_over_kernel(u, load, kernel)?.0)
}

/// Constant Hessian, shear coupling and divergence rows of the quadratic problem.
struct Operators {
    stiffness: DMatrix<f64>,
    div_rows: Vec<([usize; 12], nalgebra::SMatrix<f64, 12, 1>, f64)>,
    unknowns: usize,
}

fn assemble(p: &QuadraticProblem<'_>, with_shear: bool) -> Operators {
    let nodes = p.mesh.num_nodes();
    let unknowns = 3 * nodes + if with_shear { 2 } else { 0 };
    let c = solver_tensor(p.material);
    let s = shear_modes();
    let mut stiffness = DMatrix::zeros(unknowns, unknowns);
    let mut div_rows = Vec::with_capacity(p.mesh.num_elements());
    for ((t, g), vol) in p.mesh.tets().iter().zip(p.mesh.gradient_maps()).zip(p.mesh.element_volumes()) {
        let dofs = local_dofs(t);
        let b = strain_operator(g);
        let local: Mat12 = b.transpose() * c * b * *vol;
        scatter_matrix(&mut stiffness, &dofs, &local);
        if with_shear {
            for alpha in 0..2 {
                let coupling = b.transpose() * (c * s[alpha]) * *vol;
                for (q, &gq) in dofs.iter().enumerate() {
                    stiffness[(gq, 3 * nodes + alpha)] += coupling[q];
                    stiffness[(3 * nodes + alpha, gq)] += coupling[q];
                }
                for beta in 0..2 {
                    stiffness[(3 * nodes + alpha, 3 * nodes + beta)] += vol * s[alpha].dot(&(c * s[beta]));
                }
            }
        }
        div_rows.push((dofs, divergence_row(g), *vol));
    }
    Operators { stiffness, div_rows, unknowns }
}

/// `½ zᵀ H z + cᵀ z` with `H` and `c` fixed for one penalty stage.
struct QuadraticObjective {
    hessian: DMatrix<f64>,
    linear: DVector<f64>,
}

impl SmoothObjective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.linear.len()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) + self.linear.dot(x)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.hessian * x + &self.linear
    }
    fn hessian(&self, _: &DVector<f64>) -> DMatrix<f64> {
        self.hessian.clone()
    }
}

/// Solution of one convex subproblem `min_u ∫Q − L(R_θ u)` (with shear for `G̃^I`).
struct InnerSolution {
    z: DVector<f64>,
    value: f64,
    iterations: usize,
    outer: usize,
    termination: Termination,
    traces: Vec<Vec<f64>>,
    kappa: f64,
}

fn solve_fixed_rotation(p: &QuadraticProblem<'_>, ops: &Operators, theta: f64) -> Result<InnerSolution> {
    let r = Rotation::about_e3(theta);
    let mut load_vector = DVector::zeros(ops.unknowns);
    for (a, f) in p.load.nodal_forces().iter().enumerate() {
        let pulled = r.matrix().transpose() * f;
        for i in 0..3 {
            load_vector[3 * a + i] = -pulled[i];
        }
    }
    let mut lower = vec![f64::NEG_INFINITY; ops.unknowns];
    for &n in &p.obstacle.node_indices {
        lower[3 * n + 2] = 0.0;
    }
    let elements = ops.div_rows.len();
    let mut multipliers = vec![0.0; elements];
    let mut z = DVector::zeros(ops.unknowns);
    let mut traces = Vec::new();
    let mut iterations = 0;
    let mut outer = 0;
    let mut termination = Termination::Converged;
    let mut residual = f64::INFINITY;
    let mut kappa = p.schedule.kappa0;
    let total_updates = p.schedule.stages + p.schedule.max_updates;
    for update in 0..total_updates {
        if update < p.schedule.stages {
            kappa = p.schedule.kappa0 * p.schedule.factor.powi(update as i32);
        }
        let mut hessian = ops.stiffness.clone();
        let mut linear = load_vector.clone();
        for ((dofs, row, vol), mu) in ops.div_rows.iter().zip(&multipliers) {
            let local: Mat12 = row * row.transpose() * (kappa * vol);
            scatter_matrix(&mut hessian, dofs, &local);
            scatter_vector(&mut linear, dofs, &(row * (mu * vol)));
        }
        let objective = QuadraticObjective { hessian, linear };
        let out = minimize_bounded(&objective, &lower, z.clone(), &p.options);
        iterations += out.iterations;
        outer += 1;
        traces.push(out.trace);
        termination = out.termination;
        if out.termination == Termination::Diverged {
            return Err(LabError::Unbounded(format!(
                "{} decreases without bound at θ = {theta:.6} (objective {:.3e})",
                p.variant.name(),
                out.value
            )));
        }
        z = out.x;
        let divs: Vec<f64> = ops.div_rows.iter().map(|(dofs, row, _)| row.dot(&gather(&z, dofs))).collect();
        let previous = residual;
        residual = divs.iter().map(|d| d.abs()).fold(0.0, f64::max);
        if p.schedule.finished(update, residual, previous) {
            break;
        }
        for (mu, d) in multipliers.iter_mut().zip(&divs) {
            *mu += kappa * d;
        }
    }
    let value = 0.5 * z.dot(&(&ops.stiffness * &z)) + load_vector.dot(&z);
    Ok(InnerSolution { z, value, iterations, outer, termination, traces, kappa })
}

/// Minimizes the limit functional of `p`.
pub fn minimize_limit(p: &QuadraticProblem<'_>) -> Result<SolveResult> {
    let resultant = p.load.resultant();
    let scale = 1e-9 * (1.0 + resultant.norm() + p.load.moments().norm());
    if resultant.z > scale {
        return Err(LabError::Unbounded(format!("L(e₃) ≤ 0 violated (L(e₃) = {:.6e})", resultant.z)));
    }
    if resultant.x.abs() > scale || resultant.y.abs() > scale {
        return Err(LabError::Unbounded(format!(
            "horizontal resultant must vanish (L(e₁) = {:.6e}, L(e₂) = {:.6e})",
            resultant.x, resultant.y
        )));
    }
    let with_shear = p.variant == LimitVariant::GTildeI;
    let ops = assemble(p, with_shear);
    let mut evaluated: Vec<(f64, InnerSolution)> = Vec::new();
    let mut solve = |theta: f64| -> Result<f64> {
        let s = solve_fixed_rotation(p, &ops, theta)?;
        let v = s.value;
        evaluated.push((theta, s));
        Ok(v)
    };
    let mut ties = Vec::new();
    if p.rotations_about_e3() {
        let grid: Vec<f64> =
            (0..THETA_GRID).map(|k| 2.0 * std::f64::consts::PI * k as f64 / THETA_GRID as f64).collect();
        let values: Vec<f64> = grid.iter().map(|&t| solve(t)).collect::<Result<_>>()?;
        let best = values.iter().copied().fold(f64::INFINITY, f64::min);
        let spread = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) - best;
        let tie_tol = 1e-10 * (1.0 + best.abs());
        ties = grid.iter().zip(&values).filter(|(_, v)| **v - best <= tie_tol).map(|(t, _)| *t).collect();
        if spread > tie_tol {
            let k = values.iter().position(|v| *v == best).expect("nonempty grid");
            let step = 2.0 * std::f64::consts::PI / THETA_GRID as f64;
            golden_section(&mut solve, grid[k] - step, grid[k] + step)?;
        }
    } else {
        solve(0.0)?;
    }
    let (_, best) = evaluated
        .into_iter()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.abs().total_cmp(&b.0.abs())))
        .expect("at least one subproblem");
    finish(p, best, ties)
}

fn golden_section(f: &mut dyn FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<()> {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > GOLDEN_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d)?;
        }
    }
    Ok(())
}

fn finish(p: &QuadraticProblem<'_>, s: InnerSolution, ties: Vec<f64>) -> Result<SolveResult> {
    let nodes = p.mesh.num_nodes();
    let u = DisplacementField::new(p.mesh, to_field(&s.z, nodes))?;
    let shear = if p.variant == LimitVariant::GTildeI { Some([s.z[3 * nodes], s.z[3 * nodes + 1]]) } else { None };
    let objective = evaluate_limit(p.variant, &u, p.material, p.load, p.kernel, p.mesh)?;
    let residual = element_divergences(p.mesh, &to_vector(u.nodal())).iter().map(|d| d.abs()).fold(0.0, f64::max);
    let active_nodes = p.obstacle.node_indices.iter().copied().filter(|&n| u.nodal()[n].z <= 1e-12).collect::<Vec<_>>();
    let rotation = if p.rotations_about_e3() {
        // The maximizer over the kernel at the minimizer; equals R_θ at optimality.
        max_load_over_kernel(&u, p.load, KernelClass::RotationsAboutE3)?.1
    } else {
        Rotation::identity()
    };
    Ok(SolveResult {
        minimizer: u.into_nodal(),
        objective,
        solver_value: s.value,
        constraint_residual: residual,
        active_nodes,
        iterations: s.iterations,
        outer_iterations: s.outer,
        termination: s.termination,
        traces: s.traces,
        rotation,
        shear,
        kappa: s.kappa,
        feasible: residual <= p.schedule.target,
        equal_value_angles: ties,
        starts: Vec::new(),
    })
}

/// `u ↦ u` rotated: `(R u)(x) = R u(x)`, nodewise.
pub fn rotate_field(u: &DisplacementField, r: &Rotation, mesh: &Mesh) -> Result<DisplacementField> {
    DisplacementField::new(mesh, u.nodal().iter().map(|v| r.matrix() * v).collect())
}
