//! Experiment harness for the trapped random walk: configuration, the
//! scaling study, plots and the validation suite.

pub mod checks;
pub mod config;
pub mod error;
pub mod plots;
pub mod scaling;
pub mod validate;

pub use config::{ExperimentConfig, InitChoice, MixChoice, ModelConfig};
pub use error::{CliError, CliResult};
pub use scaling::{run_scaling_experiment, ScalingRow};
pub use validate::{run_validation_suite, Level, SuiteOptions, ValidationReport};
