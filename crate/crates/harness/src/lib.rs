//! Experiment harness: configuration, datasets, Monte Carlo drivers and
//! result files.

pub mod config;
pub mod dataset;
pub mod emit;
pub mod error;
pub mod experiment;
pub mod output;

pub use config::{load_config, ExperimentConfig, ExperimentKind};
pub use error::HarnessError;
pub use experiment::{run_and_emit, run_experiment, Results};
