//! Config-driven experiment runner for the `mfg-core` solvers.
//!
//! See [`config`] for the file format. [`runner::run_experiment`] executes a
//! config and writes plot-ready CSV files; the `mfg` binary wraps it.

pub mod config;
pub mod output;
pub mod runner;

use std::path::{Path, PathBuf};

pub use config::{Algorithm, ExperimentConfig, GameConfig};
pub use runner::{gaps_for_policy, run_experiment, RunSummary};

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error("config error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Solver(#[from] mfg_core::Error),
}

impl RunnerError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        RunnerError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit status: 2 for bad configs or inputs, 3 for numeric
    /// failures during a solve, 1 for file system errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::Config(_) | RunnerError::Input(_) => 2,
            RunnerError::Io { .. } => 1,
            RunnerError::Solver(e) => match e {
                mfg_core::Error::SimplexViolation { .. } | mfg_core::Error::NumericOverflow { .. } => 3,
                _ => 2,
            },
        }
    }
}
