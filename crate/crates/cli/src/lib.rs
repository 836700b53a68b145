//! Experiment harness: configuration, runners, manifests and plotting for
//! the stochastic-numerics library.

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod plot;

pub use config::{validate_config, ExperimentConfig, ExperimentKind};
pub use experiments::{run, RunError, RunOutput};
