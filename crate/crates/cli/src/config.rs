//! Run configuration, output formats and the error/exit-code table.

use std::path::{Path, PathBuf};

use nlpkit::classify::ClassifyError;
use nlpkit::corpus::CorpusError;
use nlpkit::metrics::MetricsError;
use thiserror::Error;

use crate::model_io::ModelIoError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_FORMAT: i32 = 4;
pub const EXIT_SIMVAL: i32 = 5;

pub const EXIT_CODE_HELP: &str = "\
Exit codes:
  0  success
  1  training or internal failure
  2  usage error (unknown flag, missing or invalid argument)
  3  missing or unreadable input, unwritable output
  4  format violation (malformed corpus, corrupt, truncated or mismatched model file)
  5  simval mismatch";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    SimvalMismatch(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Format(_) => EXIT_FORMAT,
            CliError::SimvalMismatch(_) => EXIT_SIMVAL,
            CliError::Other(_) => EXIT_OTHER,
        }
    }

    pub fn other(e: impl std::fmt::Display) -> Self {
        CliError::Other(e.to_string())
    }

    pub fn format(e: impl std::fmt::Display) -> Self {
        CliError::Format(e.to_string())
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Format(other.to_string()),
        }
    }
}

impl From<ModelIoError> for CliError {
    fn from(e: ModelIoError) -> Self {
        match e {
            ModelIoError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Format(other.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Format(e.to_string())
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        CliError::Format(e.to_string())
    }
}

/// Settings shared by every command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub format: OutputFormat,
    /// Where to write the report in addition to stdout.
    pub report: Option<PathBuf>,
}

impl RunConfig {
    /// Fails with an I/O error for the first path that is not a readable file.
    pub fn require_inputs(paths: &[&Path]) -> Result<(), CliError> {
        for p in paths {
            match std::fs::metadata(p) {
                Ok(m) if m.is_file() => {}
                Ok(_) => return Err(CliError::io(p, "not a regular file")),
                Err(e) => return Err(CliError::io(p, e)),
            }
        }
        Ok(())
    }
}
