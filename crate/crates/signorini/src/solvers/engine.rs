//! Bound-constrained minimization by projected Newton (Bertsekas) or
//! projected L-BFGS, with a projected Armijo search.
//!
//! Only lower bounds occur in this crate (`y₃ ≥ 0` or `u₃ ≥ 0` at obstacle
//! nodes), so the feasible set is a box with one-sided faces and the
//! projection is a componentwise `max`.

use nalgebra::{DMatrix, DVector};

/// A twice differentiable objective on `ℝⁿ`.
pub trait SmoothObjective {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    /// Only called by [`Strategy::Newton`].
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    Newton,
    Lbfgs { memory: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineOptions {
    pub max_iter: usize,
    /// Bound on `‖x − P(x − ∇f)‖_∞ / max(1, |f|)`.
    pub tol: f64,
    pub strategy: Strategy,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { max_iter: 5000, tol: 1e-8, strategy: Strategy::Newton }
    }
}

/// Why an inner minimization stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// The line search could not decrease the objective any further.
    Stalled,
    /// The objective fell without bound or became non-finite.
    Diverged,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max-iterations",
            Termination::Stalled => "stalled",
            Termination::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineOutcome {
    pub x: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Objective after every accepted step, starting with the initial value.
    pub trace: Vec<f64>,
    pub projected_gradient: f64,
}

/// Componentwise projection onto `{x ≥ lower}`.
pub fn project(x: &mut DVector<f64>, lower: &[f64]) {
    for (xi, li) in x.iter_mut().zip(lower) {
        if *xi < *li {
            *xi = *li;
        }
    }
}

fn projected_gradient(x: &DVector<f64>, g: &DVector<f64>, lower: &[f64]) -> DVector<f64> {
    DVector::from_iterator(x.len(), (0..x.len()).map(|i| x[i] - (x[i] - g[i]).max(lower[i])))
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
const ACTIVE_EPS: f64 = 1e-3;

/// Minimizes `f` over `{x ≥ lower}` starting from the projection of `x0`.
/// Use `f64::NEG_INFINITY` for unbounded coordinates.
pub fn minimize_bounded(
    f: &dyn SmoothObjective,
    lower: &[f64],
    x0: DVector<f64>,
    opts: &EngineOptions,
) -> EngineOutcome {
    let n = f.dim();
    assert_eq!(lower.len(), n, "one bound per coordinate");
    assert_eq!(x0.len(), n, "start point has the wrong dimension");
    let mut x = x0;
    project(&mut x, lower);
    let mut value = f.value(&x);
    let mut trace = vec![value];
    let divergence_floor = -1e12 * (1.0 + value.abs());
    let mut shift = 0.0;
    let mut memory: Vec<(DVector<f64>, DVector<f64>)> = Vec::new();
    let mut g = f.gradient(&x);
    let mut iterations = 0;

    let outcome = |x: DVector<f64>, value, iterations, termination, trace, pg| EngineOutcome {
        x,
        value,
        iterations,
        termination,
        trace,
        projected_gradient: pg,
    };

    loop {
        if !value.is_finite() || value < divergence_floor {
            return outcome(x, value, iterations, Termination::Diverged, trace, f64::INFINITY);
        }
        let pg = projected_gradient(&x, &g, lower);
        let pg_norm = pg.amax();
        if pg_norm / value.abs().max(1.0) <= opts.tol {
            return outcome(x, value, iterations, Termination::Converged, trace, pg_norm);
        }
        if iterations >= opts.max_iter {
            return outcome(x, value, iterations, Termination::MaxIterations, trace, pg_norm);
        }
        iterations += 1;

        let eps = ACTIVE_EPS.min(pg.norm());
        let active: Vec<bool> = (0..n).map(|i| x[i] - lower[i] <= eps && g[i] > 0.0).collect();
        let free: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();

        let mut accepted = None;
        for attempt in 0..8 {
            let d = match opts.strategy {
                Strategy::Newton => newton_direction(f, &x, &g, &active, &free, &mut shift, attempt),
                Strategy::Lbfgs { .. } if attempt == 0 => lbfgs_direction(&g, &active, &free, &memory),
                Strategy::Lbfgs { .. } => Some(-&g),
            };
            let Some(d) = d else { continue };
            if let Some(step) = line_search(f, lower, &x, &g, &d, value) {
                accepted = Some(step);
                break;
            }
            if matches!(opts.strategy, Strategy::Lbfgs { .. }) {
                memory.clear();
            }
        }
        let Some((x_new, value_new)) = accepted else {
            return outcome(x, value, iterations, Termination::Stalled, trace, pg_norm);
        };
        let g_new = f.gradient(&x_new);
        if let Strategy::Lbfgs { memory: m } = opts.strategy {
            let s = &x_new - &x;
            let y = &g_new - &g;
            if s.dot(&y) > 1e-14 * s.norm() * y.norm() {
                memory.push((s, y));
                if memory.len() > m.max(1) {
                    memory.remove(0);
                }
            }
        }
        x = x_new;
        value = value_new;
        g = g_new;
        trace.push(value);
        shift *= 0.1;
    }
}

/// Newton step on the free coordinates with a Levenberg shift that grows
/// until the shifted reduced Hessian is positive definite; diagonally
/// scaled gradient step on the active ones.
fn newton_direction(
    f: &dyn SmoothObjective,
    x: &DVector<f64>,
    g: &DVector<f64>,
    active: &[bool],
    free: &[usize],
    shift: &mut f64,
    attempt: usize,
) -> Option<DVector<f64>> {
    let h = f.hessian(x);
    let n = x.len();
    let scale = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-12);
    if attempt > 0 {
        *shift = (*shift * 10.0).max(1e-8 * scale);
    }
    let mut d = DVector::zeros(n);
    for i in 0..n {
        if active[i] {
            d[i] = -g[i] / h[(i, i)].max(1e-8 * scale);
        }
    }
    if free.is_empty() {
        return Some(d);
    }
    let m = free.len();
    let g_free = DVector::from_iterator(m, free.iter().map(|&i| g[i]));
    let floor = 1e-12 * scale;
    loop {
        let reduced = DMatrix::from_fn(m, m, |a, b| h[(free[a], free[b])] + if a == b { *shift + floor } else { 0.0 });
        if let Some(chol) = reduced.cholesky() {
            let step = chol.solve(&(-&g_free));
            for (a, &i) in free.iter().enumerate() {
                d[i] = step[a];
            }
            return Some(d);
        }
        *shift = (*shift * 10.0).max(1e-8 * scale);
        if *shift > 1e12 * scale {
            return None;
        }
    }
}

fn lbfgs_direction(
    g: &DVector<f64>,
    active: &[bool],
    free: &[usize],
    memory: &[(DVector<f64>, DVector<f64>)],
) -> Option<DVector<f64>> {
    let restrict = |v: &DVector<f64>| DVector::from_iterator(free.len(), free.iter().map(|&i| v[i]));
    let pairs: Vec<(DVector<f64>, DVector<f64>)> = memory
        .iter()
        .map(|(s, y)| (restrict(s), restrict(y)))
        .filter(|(s, y)| s.dot(y) > 1e-14 * s.norm() * y.norm())
        .collect();
    let gamma = pairs.last().map(|(s, y)| s.dot(y) / y.norm_squared()).unwrap_or(1.0);
    let mut q = restrict(g);
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y) in pairs.iter().rev() {
        let a = s.dot(&q) / s.dot(y);
        q -= y * a;
        alphas.push(a);
    }
    q *= gamma;
    for ((s, y), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = y.dot(&q) / s.dot(y);
        q += s * (a - b);
    }
    let mut d = DVector::zeros(g.len());
    for i in 0..g.len() {
        if active[i] {
            d[i] = -gamma * g[i];
        }
    }
    for (a, &i) in free.iter().enumerate() {
        d[i] = -q[a];
    }
    Some(d)
}

fn line_search(
    f: &dyn SmoothObjective,
    lower: &[f64],
    x: &DVector<f64>,
    g: &DVector<f64>,
    d: &DVector<f64>,
    value: f64,
) -> Option<(DVector<f64>, f64)> {
    let mut alpha = 1.0;
    for _ in 0..MAX_HALVINGS {
        let mut trial = x + d * alpha;
        project(&mut trial, lower);
        let step = &trial - x;
        let predicted = g.dot(&step);
        if predicted < 0.0 {
            let v = f.value(&trial);
            if v.is_finite() && v <= value + ARMIJO * predicted {
                return Some((trial, v));
            }
        } else if step.amax() == 0.0 {
            return None;
        }
        alpha *= 0.5;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        a: DMatrix<f64>,
        b: DVector<f64>,
    }

    impl SmoothObjective for Quadratic {
        fn dim(&self) -> usize {
            self.b.len()
        }
        fn value(&self, x: &DVector<f64>) -> f64 {
            0.5 * x.dot(&(&self.a * x)) - self.b.dot(x)
        }
        fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
            &self.a * x - &self.b
        }
        fn hessian(&self, _: &DVector<f64>) -> DMatrix<f64> {
            self.a.clone()
        }
    }

    struct Rosenbrock;

    impl SmoothObjective for Rosenbrock {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &DVector<f64>) -> f64 {
            (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
        }
        fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
            let r = x[1] - x[0] * x[0];
            DVector::from_vec(vec![-2.0 * (1.0 - x[0]) - 400.0 * x[0] * r, 200.0 * r])
        }
        fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
            DMatrix::from_row_slice(
                2,
                2,
                &[2.0 - 400.0 * (x[1] - 3.0 * x[0] * x[0]), -400.0 * x[0], -400.0 * x[0], 200.0],
            )
        }
    }

    fn box_qp() -> Quadratic {
        // Unconstrained minimizer (1, -1, -2); with x ≥ 0 the solution is (0.5, 0, 0).
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        let b = &a * DVector::from_vec(vec![1.0, -1.0, -2.0]);
        Quadratic { a, b }
    }

    #[test]
    fn bounded_quadratic_both_strategies() {
        let q = box_qp();
        for strategy in [Strategy::Newton, Strategy::Lbfgs { memory: 8 }] {
            let opts = EngineOptions { strategy, ..EngineOptions::default() };
            let out = minimize_bounded(&q, &[0.0; 3], DVector::from_element(3, 2.0), &opts);
            assert_eq!(out.termination, Termination::Converged, "{strategy:?}");
            let expected = DVector::from_vec(vec![0.5, 0.0, 0.0]);
            assert!((&out.x - expected).amax() < 1e-7, "{strategy:?}: {}", out.x);
            assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn rosenbrock_unconstrained_and_bounded() {
        let opts = EngineOptions::default();
        let free = [f64::NEG_INFINITY; 2];
        let out = minimize_bounded(&Rosenbrock, &free, DVector::from_vec(vec![-1.2, 1.0]), &opts);
        assert_eq!(out.termination, Termination::Converged);
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6);
        // With x₀ ≥ 1.5 the minimizer sits on the bound with x₁ = 2.25.
        let out = minimize_bounded(&Rosenbrock, &[1.5, f64::NEG_INFINITY], DVector::from_vec(vec![2.0, 0.0]), &opts);
        assert!((out.x[0] - 1.5).abs() < 1e-12 && (out.x[1] - 2.25).abs() < 1e-6);
    }

    #[test]
    fn unbounded_linear_objective_diverges() {
        let q = Quadratic { a: DMatrix::zeros(2, 2), b: DVector::from_vec(vec![1.0, 0.0]) };
        let out = minimize_bounded(&q, &[f64::NEG_INFINITY, 0.0], DVector::zeros(2), &EngineOptions::default());
        assert_eq!(out.termination, Termination::Diverged);
    }

    #[test]
    fn singular_flat_direction_is_harmless() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let q = Quadratic { a, b: DVector::from_vec(vec![1.0, 0.0]) };
        let out =
            minimize_bounded(&q, &[f64::NEG_INFINITY; 2], DVector::from_vec(vec![0.0, 3.0]), &EngineOptions::default());
        assert_eq!(out.termination, Termination::Converged);
        assert!((out.x[0] - 1.0).abs() < 1e-9 && (out.x[1] - 3.0).abs() < 1e-9);
    }
}
