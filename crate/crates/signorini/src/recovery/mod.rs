//! Upper-bound construction: divergence-free extension and mollification of a
//! limit displacement, its volume-preserving Lagrangian flow, the vertical
//! lift, and the discrete divergence corrector.

mod bogovskii;
mod extension;
mod fields;
mod flow;
mod mollifier;
mod sequence;

pub use bogovskii::{bogovskii_correct, BogovskiiCorrection, BogovskiiOptions};
pub use extension::BoxExtension;
pub use fields::{AnalyticField, VectorField};
pub use flow::{flow_points, integrate_flow, BoundLedger, BoundTally, FlowBound, FlowOptions, FlowResult, PointFlow};
pub use mollifier::{
    ball_rule, gauss_legendre, holder_estimate, mollifier_k_by_quadrature, mollifier_mass, mollifier_profile, mollify,
    HolderEstimate, MollifyOptions, SmoothField, SmoothFieldNorms, MOLLIFIER_K, MOLLIFIER_NORMALIZATION,
};
pub use sequence::{
    apriori_lift, build_recovery_sequence, default_length_scale, verify_upper_bound, LiftPolicy, RecoveryOptions,
    RecoverySequence, RecoveryStep, UpperBoundReport, UpperBoundRow, DIVERGENCE_TOLERANCE,
};
