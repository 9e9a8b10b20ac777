//! Experiment runner for `clv-core`: strict JSON configs, a registry of
//! experiments, CSV/JSON result tables and the `verify` property suites.

pub mod checks;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod suites;

pub use checks::Check;
pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
