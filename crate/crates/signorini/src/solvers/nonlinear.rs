//! Minimization of `G_h^I(y) = h⁻² ∫ W^I(∇y) − h⁻¹ L(y − x)` over nodal
//! deformations with `y3 ≥ 0` at obstacle nodes.
//!
//! The unknown is the scaled displacement `w = (y − x)/h`, which keeps the
//! Hessian of order one for every `h`. The constraint `det ∇y = 1` is imposed
//! per element by an augmented Lagrangian on `c_e = (det ∇y_e − 1)/h`.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use super::assembly::{
    local_dofs, pull_back_gradient, pull_back_hessian, scatter_matrix, scatter_vector, to_field, to_vector, Mat12,
};
use super::engine::{minimize_bounded, EngineOptions, SmoothObjective, Termination};
use super::{PenaltySchedule, SolveResult, StartOutcome};
use crate::error::{LabError, Result};
use crate::geometry::{Mesh, ObstacleSet};
use crate::kinematics::DeformationField;
use crate::loads::{verify_global_admissibility, Load, Rotation, DEFAULT_BUDGET};
use crate::material::{yeoh, MaterialModel};

/// Seeded starting points: the reference configuration, rigid rotations about
/// `e3` through the domain centroid, random perturbations of size `0.05 h`,
/// and an optional caller-supplied deformation.
#[derive(Debug, Clone, PartialEq)]
pub struct Multistart {
    pub rotation_angles: Vec<f64>,
    pub noisy_starts: usize,
    pub noise: f64,
    pub seed: u64,
    pub warm_start: Option<Vec<Vector3<f64>>>,
}

impl Default for Multistart {
    fn default() -> Self {
        Multistart {
            rotation_angles: vec![std::f64::consts::FRAC_PI_2, std::f64::consts::PI],
            noisy_starts: 2,
            noise: 0.05,
            seed: 0,
            warm_start: None,
        }
    }
}

/// `G_h^I` on a fixed mesh.
#[derive(Debug, Clone)]
pub struct NonlinearProblem<'a> {
    pub mesh: &'a Mesh,
    pub material: &'a MaterialModel,
    pub load: &'a Load,
    pub obstacle: &'a ObstacleSet,
    pub h: f64,
    pub schedule: PenaltySchedule,
    pub multistart: Multistart,
    pub options: EngineOptions,
    admissibility_checked: bool,
}

impl<'a> NonlinearProblem<'a> {
    /// Checks global admissibility of the load first, since otherwise
    /// `inf G_h^I = −∞`.
    pub fn new(
        mesh: &'a Mesh,
        material: &'a MaterialModel,
        load: &'a Load,
        obstacle: &'a ObstacleSet,
        h: f64,
    ) -> Result<NonlinearProblem<'a>> {
        let report = verify_global_admissibility(load, obstacle, DEFAULT_BUDGET, 0);
        if let Some(v) = report.violations().first() {
            return Err(LabError::Inadmissible(v.to_string()));
        }
        let mut p = NonlinearProblem::reference_branch(mesh, material, load, obstacle, h)?;
        p.admissibility_checked = true;
        Ok(p)
    }

    /// Skips the admissibility check. For an inadmissible load the result is
    /// a local minimizer near the starting points, not the infimum.
    pub fn reference_branch(
        mesh: &'a Mesh,
        material: &'a MaterialModel,
        load: &'a Load,
        obstacle: &'a ObstacleSet,
        h: f64,
    ) -> Result<NonlinearProblem<'a>> {
        if !(h > 0.0 && h < 1.0) {
            return Err(LabError::InvalidInput(format!("h must lie in (0, 1), got {h}")));
        }
        if obstacle.node_indices.is_empty() {
            return Err(LabError::ObstacleHypothesis);
        }
        mesh.check_nodal(load.nodal_forces().len())?;
        Ok(NonlinearProblem {
            mesh,
            material,
            load,
            obstacle,
            h,
            schedule: PenaltySchedule::for_nonlinear(material.c1()),
            multistart: Multistart::default(),
            options: EngineOptions::default(),
            admissibility_checked: false,
        })
    }

    pub fn with_schedule(mut self, schedule: PenaltySchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_multistart(mut self, multistart: Multistart) -> Self {
        self.multistart = multistart;
        self
    }

    pub fn with_options(mut self, options: EngineOptions) -> Self {
        self.options = options;
        self
    }

    pub fn admissibility_checked(&self) -> bool {
        self.admissibility_checked
    }

    fn starts(&self) -> Vec<(String, DVector<f64>)> {
        let nodes = self.mesh.nodes();
        let mut starts = vec![("reference".to_string(), DVector::zeros(3 * nodes.len()))];
        let center = nodes.iter().sum::<Vector3<f64>>() / nodes.len() as f64;
        for &theta in &self.multistart.rotation_angles {
            let r = Rotation::about_e3(theta);
            let w: Vec<Vector3<f64>> =
                nodes.iter().map(|x| (r.matrix() * (x - center) + center - x) / self.h).collect();
            starts.push((format!("rotation {theta:.4}"), to_vector(&w)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.multistart.seed);
        let noise = Uniform::new_inclusive(-self.multistart.noise, self.multistart.noise).expect("finite range");
        for k in 0..self.multistart.noisy_starts {
            let w = DVector::from_iterator(3 * nodes.len(), (0..3 * nodes.len()).map(|_| noise.sample(&mut rng)));
            starts.push((format!("noise {k}"), w));
        }
        if let Some(y) = &self.multistart.warm_start {
            let w: Vec<Vector3<f64>> = y.iter().zip(nodes).map(|(y, x)| (y - x) / self.h).collect();
            starts.push(("warm".to_string(), to_vector(&w)));
        }
        starts
    }
}

/// `h⁻² ∫ W(∇y) − h⁻¹ L(y − x)` at a nodal deformation, ignoring the constraint.
pub fn nonlinear_energy(y: &DeformationField, m: &MaterialModel, load: &Load, h: f64, mesh: &Mesh) -> Result<f64> {
    mesh.check_nodal(y.nodal().len())?;
    let c = m.coefficients();
    let elastic: f64 = y.gradients().iter().zip(mesh.element_volumes()).map(|(f, v)| v * yeoh::energy(&c, f)).sum();
    let w: Vec<Vector3<f64>> = y.nodal().iter().zip(mesh.nodes()).map(|(y, x)| (y - x) / h).collect();
    Ok(elastic / (h * h) - load.apply(&w)?)
}

struct AugmentedEnergy<'p> {
    mesh: &'p Mesh,
    coefficients: [f64; 3],
    h: f64,
    load: DVector<f64>,
    multipliers: &'p [f64],
    kappa: f64,
}

impl AugmentedEnergy<'_> {
    fn deformation_gradient(&self, w: &DVector<f64>, e: usize) -> nalgebra::Matrix3<f64> {
        let t = &self.mesh.tets()[e];
        let g = &self.mesh.gradient_maps()[e];
        let mut grad = nalgebra::Matrix3::identity();
        for a in 0..4 {
            let wa = Vector3::new(w[3 * t[a]], w[3 * t[a] + 1], w[3 * t[a] + 2]);
            grad += wa * g.column(a).transpose() * self.h;
        }
        grad
    }

    fn constraint_values(&self, w: &DVector<f64>) -> Vec<f64> {
        (0..self.mesh.num_elements()).map(|e| (self.deformation_gradient(w, e).determinant() - 1.0) / self.h).collect()
    }
}

impl SmoothObjective for AugmentedEnergy<'_> {
    fn dim(&self) -> usize {
        self.load.len()
    }

    fn value(&self, w: &DVector<f64>) -> f64 {
        let mut total = -self.load.dot(w);
        for (e, vol) in self.mesh.element_volumes().iter().enumerate() {
            let f = self.deformation_gradient(w, e);
            let c = (f.determinant() - 1.0) / self.h;
            total += vol
                * (yeoh::energy(&self.coefficients, &f) / (self.h * self.h)
                    + self.multipliers[e] * c
                    + 0.5 * self.kappa * c * c);
        }
        total
    }

    fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut grad = -self.load.clone();
        for (e, (t, g)) in self.mesh.tets().iter().zip(self.mesh.gradient_maps()).enumerate() {
            let vol = self.mesh.element_volumes()[e];
            let f = self.deformation_gradient(w, e);
            let c = (f.determinant() - 1.0) / self.h;
            let p = yeoh::gradient(&self.coefficients, &f) / self.h
                + yeoh::det_gradient(&f) * (self.multipliers[e] + self.kappa * c);
            scatter_vector(&mut grad, &local_dofs(t), &(pull_back_gradient(&p, g) * vol));
        }
        grad
    }

    fn hessian(&self, w: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut hess = DMatrix::zeros(n, n);
        for (e, (t, g)) in self.mesh.tets().iter().zip(self.mesh.gradient_maps()).enumerate() {
            let vol = self.mesh.element_volumes()[e];
            let f = self.deformation_gradient(w, e);
            let c = (f.determinant() - 1.0) / self.h;
            let cof = pull_back_gradient(&yeoh::det_gradient(&f), g);
            let second = yeoh::hessian(&self.coefficients, &f)
                + yeoh::det_hessian(&f) * (self.h * (self.multipliers[e] + self.kappa * c));
            let local: Mat12 = (pull_back_hessian(&second, g) + cof * cof.transpose() * self.kappa) * vol;
            scatter_matrix(&mut hess, &local_dofs(t), &local);
        }
        hess
    }
}

struct StartSolution {
    w: DVector<f64>,
    residual: f64,
    iterations: usize,
    outer: usize,
    termination: Termination,
    traces: Vec<Vec<f64>>,
    kappa: f64,
}

fn solve_from(p: &NonlinearProblem<'_>, mut w: DVector<f64>, lower: &[f64]) -> StartSolution {
    let load = to_vector(p.load.nodal_forces());
    let mut multipliers = vec![0.0; p.mesh.num_elements()];
    let mut traces = Vec::new();
    let (mut iterations, mut outer) = (0, 0);
    let mut termination = Termination::Converged;
    let mut residual = f64::INFINITY;
    let mut kappa = p.schedule.kappa0;
    for update in 0..p.schedule.stages + p.schedule.max_updates {
        if update < p.schedule.stages {
            kappa = p.schedule.kappa0 * p.schedule.factor.powi(update as i32);
        }
        let objective = AugmentedEnergy {
            mesh: p.mesh,
            coefficients: p.material.coefficients(),
            h: p.h,
            load: load.clone(),
            multipliers: &multipliers,
            kappa,
        };
        let out = minimize_bounded(&objective, lower, w.clone(), &p.options);
        iterations += out.iterations;
        outer += 1;
        traces.push(out.trace);
        termination = out.termination;
        if termination == Termination::Diverged {
            w = out.x;
            break;
        }
        w = out.x;
        let c = objective.constraint_values(&w);
        let previous = residual;
        residual = c.iter().map(|c| (c * p.h).abs()).fold(0.0, f64::max);
        if p.schedule.finished(update, residual, previous) {
            break;
        }
        for (mu, c) in multipliers.iter_mut().zip(&c) {
            *mu += kappa * c;
        }
    }
    StartSolution { w, residual, iterations, outer, termination, traces, kappa }
}

/// Multistart augmented-Lagrangian minimization of `G_h^I`. The best start
/// among those meeting the determinant target is returned; if none meets it,
/// the best overall is returned with `feasible = false`.
pub fn minimize_nonlinear(p: &NonlinearProblem<'_>) -> Result<SolveResult> {
    let nodes = p.mesh.nodes();
    let mut lower = vec![f64::NEG_INFINITY; 3 * nodes.len()];
    for &n in &p.obstacle.node_indices {
        lower[3 * n + 2] = -nodes[n].z / p.h;
    }
    let mut outcomes = Vec::new();
    let mut best: Option<(f64, bool, StartSolution, DeformationField)> = None;
    for (label, w0) in p.starts() {
        let s = solve_from(p, w0, &lower);
        let y = to_field(&s.w, nodes.len()).iter().zip(nodes).map(|(w, x)| x + w * p.h).collect();
        let y = DeformationField::new(p.mesh, y)?;
        let objective = nonlinear_energy(&y, p.material, p.load, p.h, p.mesh)?;
        let feasible = s.residual <= p.schedule.flag;
        let diverged = s.termination == Termination::Diverged || !objective.is_finite();
        outcomes.push(StartOutcome { label, objective, residual: s.residual, termination: s.termination });
        if diverged {
            continue;
        }
        let better = match &best {
            None => true,
            Some((v, f, _, _)) => (feasible && !f) || (feasible == *f && objective < *v),
        };
        if better {
            best = Some((objective, feasible, s, y));
        }
    }
    let Some((objective, feasible, s, y)) = best else {
        let trace: Vec<String> = outcomes.iter().map(|o| format!("{}: {:.3e}", o.label, o.objective)).collect();
        return Err(LabError::Unbounded(format!("all starts diverged ({})", trace.join("; "))));
    };
    let active_nodes = p.obstacle.node_indices.iter().copied().filter(|&n| y.nodal()[n].z <= 1e-12).collect();
    let residual = y.max_det_residual();
    Ok(SolveResult {
        minimizer: y.nodal().to_vec(),
        objective,
        solver_value: objective,
        constraint_residual: residual,
        active_nodes,
        iterations: s.iterations,
        outer_iterations: s.outer,
        termination: s.termination,
        traces: s.traces,
        rotation: Rotation::identity(),
        shear: None,
        kappa: s.kappa,
        feasible,
        equal_value_angles: Vec::new(),
        starts: outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_unit_cube_mesh;

    #[test]
    fn augmented_energy_derivatives_match_finite_differences() {
        let mesh = build_unit_cube_mesh(1).unwrap();
        let multipliers: Vec<f64> = (0..mesh.num_elements()).map(|e| 0.1 * e as f64 - 0.2).collect();
        let n = 3 * mesh.num_nodes();
        let energy = AugmentedEnergy {
            mesh: &mesh,
            coefficients: [1.0, 0.2, 0.1],
            h: 0.3,
            load: DVector::from_fn(n, |i, _| (i as f64 * 0.37).sin()),
            multipliers: &multipliers,
            kappa: 7.0,
        };
        let w = DVector::from_fn(n, |i, _| (i as f64 * 1.3).cos() * 0.4);
        let g = energy.gradient(&w);
        let hess = energy.hessian(&w);
        let step = 1e-6;
        for i in 0..n {
            let mut plus = w.clone();
            let mut minus = w.clone();
            plus[i] += step;
            minus[i] -= step;
            let fd = (energy.value(&plus) - energy.value(&minus)) / (2.0 * step);
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()), "gradient {i}: {fd} vs {}", g[i]);
            let fd_col = (energy.gradient(&plus) - energy.gradient(&minus)) / (2.0 * step);
            assert!((fd_col - hess.column(i)).amax() < 1e-5 * (1.0 + hess.column(i).amax()), "hessian column {i}");
        }
    }

    #[test]
    fn constraint_values_vanish_for_rigid_motions() {
        let mesh = build_unit_cube_mesh(1).unwrap();
        let r = Rotation::from_axis_angle(&Vector3::new(1.0, 1.0, 0.0), 0.7).unwrap();
        let h = 0.2;
        let w: Vec<Vector3<f64>> = mesh.nodes().iter().map(|x| (r.matrix() * x - x) / h).collect();
        let multipliers = vec![0.0; mesh.num_elements()];
        let energy = AugmentedEnergy {
            mesh: &mesh,
            coefficients: [1.0, 0.0, 0.0],
            h,
            load: DVector::zeros(3 * mesh.num_nodes()),
            multipliers: &multipliers,
            kappa: 1.0,
        };
        let wv = to_vector(&w);
        assert!(energy.constraint_values(&wv).iter().all(|c| c.abs() < 1e-13));
        assert!(energy.value(&wv).abs() < 1e-11);
    }
}
