//! Error type shared by all numerics modules.

use thiserror::Error;

/// Errors surfaced by the numerics layer.
#[derive(Debug, Error)]
pub enum Error {
    /// A drift/grid/parameter invariant was violated at construction.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// Evaluation requested outside the admissible domain (e.g. t = 0 for a
    /// singular time profile).
    #[error("domain error: {0}")]
    Domain(String),

    /// The time profile is not p-integrable on the requested interval.
    #[error("non-integrable time profile: beta * p = {beta_p} >= 1")]
    NonIntegrable { beta_p: f64 },

    /// The control w_{b,alpha,q} is undefined at q = infinity; weighted
    /// seminorms fall back to weight 1 instead.
    #[error("control is undefined for q = infinity")]
    ControlUndefinedForInfiniteQ,

    /// A Brownian path was queried at a time that is not a grid node.
    #[error("time {t} is not a node of the level-{level} grid")]
    NonNodeQuery { t: f64, level: u32 },

    /// Two objects that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The driving path (or evaluation grid) is too coarse for the request.
    #[error("grid too coarse: {0}")]
    TooCoarse(String),

    /// The spatial grid does not resolve the heat kernel at this time.
    #[error("heat kernel under-resolved: dx = {dx} exceeds {limit} at t = {t}")]
    Resolution { dx: f64, t: f64, limit: f64 },

    /// A Monte Carlo statistic was requested on an empty sample.
    #[error("empty sample")]
    EmptySample,

    /// A rate fit could not be performed (coincident abscissae, non-positive
    /// errors, or fewer than three points).
    #[error("degenerate rate fit: {0}")]
    DegenerateFit(String),

    /// A weighted-seminorm pair had zero weight but a non-constant increment.
    #[error("degenerate weight: control vanishes on ({s}, {t}) but |increment| = {increment}")]
    DegenerateWeight { s: f64, t: f64, increment: f64 },

    /// The mild-solution fixed point did not converge within the iteration
    /// budget; usually the damping parameter is too small or the grid too
    /// coarse.
    #[error("fixed point did not converge: residual {residual} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
