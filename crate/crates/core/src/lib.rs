//! Stochastic numerics for strong-convergence studies of Euler-Maruyama
//! schemes with Lebesgue-Hölder drift.
//!
//! The crate provides:
//!
//! * separable drift fields with verifiable Hölder regularity and exact
//!   interval controls ([`drift`]);
//! * reproducible Brownian paths on dyadic grids with bridge refinement, so
//!   coarse schemes and fine references share one noise ([`brownian`]);
//! * the polygonal and classical Euler-Maruyama schemes, a fine reference,
//!   and Picard iteration ([`schemes`]);
//! * path norms, weighted Hölder seminorms and log-log rate fits ([`norms`]);
//! * a one-dimensional mild-solution solver for the damped Kolmogorov
//!   equation with heat-kernel diagnostics ([`kolmogorov`]);
//! * Monte Carlo scaling checks for occupation-time germs ([`sewing`]).

pub mod brownian;
pub mod drift;
pub mod error;
pub mod kolmogorov;
pub mod norms;
pub mod rng;
pub mod schemes;
pub mod sewing;

pub use error::{Error, Result};
