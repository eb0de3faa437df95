//! Command implementations behind the `taguchi` binary. Split out as a
//! library so the pipeline stages can be driven from tests as well.

pub mod commands;
pub mod config;

use std::fmt;

/// Command-level error carrying its process exit code:
/// 2 validation, 3 evaluator failure, 4 incomplete records.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Evaluator(String),
    Incomplete(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Evaluator(_) => 3,
            CliError::Incomplete(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) | CliError::Evaluator(msg) | CliError::Incomplete(msg) => {
                f.write_str(msg)
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<taguchi::Error> for CliError {
    fn from(err: taguchi::Error) -> Self {
        match err {
            taguchi::Error::MissingRuns { .. } | taguchi::Error::DuplicateRuns { .. } => {
                CliError::Incomplete(err.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}
