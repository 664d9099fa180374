use thiserror::Error;

/// Every failure the laboratory can report.
///
/// Numerical infeasibility that is part of normal operation (a strict-mode
/// energy evaluated off the constraint, for instance) is not an error; it is
/// returned as [`crate::material::Constrained::Infeasible`].
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("size mismatch: expected {expected} entries, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("obstacle hypothesis violated: no boundary node lies on x3 = 0")]
    ObstacleHypothesis,

    #[error("region is not on the boundary: {0}")]
    NotOnBoundary(String),

    #[error("load center undetermined: vertical resultant vanishes")]
    LoadCenterUndetermined,

    #[error("kernel classification requires L(e3) < 0, got {0:e}")]
    KernelPrecondition(f64),

    #[error("load not admissible: {0}")]
    Inadmissible(String),

    #[error("material defect: {0}")]
    MaterialDefect(String),

    #[error("problem unbounded below: {0}")]
    Unbounded(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("constraint infeasible (residual {residual:e})")]
    Infeasible { residual: f64 },

    #[error("domain must be an axis-aligned box for this operation")]
    NotABox,

    #[error("mollifier under-resolved: eps {eps:e} is below two probe spacings ({spacing:e})")]
    UnderResolved { eps: f64, spacing: f64 },

    #[error("flow trajectory from {start:?} left the extension box at t = {t:e}: existence time exceeded")]
    FlowExit { start: [f64; 3], t: f64 },

    #[error(
        "divergence corrector infeasible after {levels} refinement levels (residual {residual:e}); refine the mesh"
    )]
    BogovskiiInfeasible { levels: usize, residual: f64 },

    #[error("recovery deformation not admissible at obstacle node {node}: y3 = {value:e}")]
    RecoveryAdmissibility { node: usize, value: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
