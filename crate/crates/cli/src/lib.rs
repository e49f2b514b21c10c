//! Experiment runner for `ergavg-core`: JSON configs in, `series.csv` and
//! `summary.json` out.

pub mod config;
pub mod error;
pub mod output;
pub mod runner;

pub use config::{load_config, parse_config, ExperimentConfig};
pub use error::CliError;
pub use runner::{run, RunOutput, Status};

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CONFIG_ERROR: i32 = 1;
    pub const TOLERANCE_FAILED: i32 = 2;
}
