//! Geodesic flow on Riemannian metrics that develop a thin neck and degenerate
//! to a cuspidal singularity.
//!
//! The crate integrates the exact Hamiltonian flow, the rescaled (blown-up)
//! flow near the neck and its front-face limit, and provides the quadratures
//! and experiment drivers that compare simulation with the winding and
//! focussing asymptotics.

// `!(a < b)` style guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod flow;
pub mod metric;
pub mod rescaled;
pub mod scaling;

pub use error::{Error, Result};
