//! Optimal per-loss reinsurance under the mean-variance premium principle.
//!
//! The crate computes the retention that maximises the adjustment coefficient
//! of a perturbed Cramér–Lundberg surplus, both for the diffusion
//! approximation (closed form up to a scalar root) and for the jump model
//! (nested root finding), together with the scaled-model convergence bounds
//! and a Monte Carlo simulator used to check them.

// `!(x > 0.0)` style guards are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod diffusion;
pub mod error;
pub mod model;
pub mod numerics;
pub mod scaling;
pub mod simulate;

pub use error::{Result, RuinError};
pub use model::{ClaimDistribution, ModelParams, RetentionFunction};
pub use numerics::{QuadratureSpec, SolveReport};
