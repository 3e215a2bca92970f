//! Numerical laboratory for clustered Allen-Cahn transition layers.

// NaN must fail the range checks, so negated comparisons are deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod interaction;
pub mod allencahn2d;
pub mod exec;
pub mod harness;
pub mod linalg;
pub mod liouville_toda;
pub mod ode;
pub mod potential;
pub mod profile1d;
pub mod quadrature;
pub mod reduction;
pub mod stability;

pub use error::{LabError, Result};
