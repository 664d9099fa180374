//! The load functional `L`, its resultants and torques, and the admissibility
//! conditions that make the energies bounded below.

mod admissibility;
mod functional;
mod rotation;
mod spec;

pub use admissibility::{
    classify_kernel, find_load_center, kernel_decision, phi, sample_rotations, shear_functional,
    verify_global_admissibility, AdmissibilityReport, KernelClass, KernelDecision, LoadCenter, Violation,
    ADMISSIBILITY_TOL, DEFAULT_BUDGET,
};
pub use functional::{eval_load, eval_load_affine, resultant_and_torque, Load, LoadPoint};
pub use rotation::Rotation;
pub use spec::{parse_load, read_load, LoadSpec, SurfaceForce, VolumeForce};

/// Nonzero Levi-Civita entries `(i, j, k, ε_ijk)`.
pub(crate) const LEVI_TRIPLES: [(usize, usize, usize, f64); 6] =
    [(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0), (0, 2, 1, -1.0), (2, 1, 0, -1.0), (1, 0, 2, -1.0)];
