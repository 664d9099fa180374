//! Incompressible elastic bodies on a rigid plane: finite-strain energies, their linearized limits and recovery sequences.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod harness;
pub mod kinematics;
pub mod loads;
pub mod material;
pub mod recovery;
pub mod solvers;

pub use error::{LabError, Result};
