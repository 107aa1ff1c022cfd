//! Scenario files, runs, figure reproduction and oracle reports behind the `pulsedd` binary.

use std::path::PathBuf;

pub mod config;
pub mod figures;
pub mod oracle_report;
pub mod run;

pub use config::{ConfigError, ScenarioConfig};

/// Exit status for a configuration problem.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for a numerical failure, an output error, or a failed oracle comparison.
pub const EXIT_FAILURE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] pulsedd::Error),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) | CliError::Output { .. } => EXIT_FAILURE,
        }
    }
}
