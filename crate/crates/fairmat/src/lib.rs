//! Experiment harness for fair matroid submodular maximization: instance
//! ingestion, synthetic generators, the experiment loop, and CSV reporting.

pub mod config;
pub mod experiment;
pub mod gen;
pub mod ingest;
pub mod report;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Core(#[from] fairmat_core::Error),
}

impl HarnessError {
    /// Config and parse problems exit nonzero; run failures are recorded
    /// in-row instead.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            HarnessError::Config(_) | HarnessError::Parse { .. } | HarnessError::Io(_)
        )
    }
}
