//! Experiment harness over the `bayes_ldp` accounting library.

pub mod config;
pub mod experiments;

pub use config::{ConfigError, ExperimentConfig, Scenario};
pub use experiments::{ExperimentError, Format};
