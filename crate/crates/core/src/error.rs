use std::path::PathBuf;

use thiserror::Error;

use crate::solver::SolveStatus;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: missing column '{column}'")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: row {row}, column '{column}': cannot parse '{value}' as a number")]
    ParseCell {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("validation: {0}")]
    Validation(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("model build: {0}")]
    Build(String),

    #[error("method '{method}' cannot be integrated as '{mode}'")]
    Inadmissible { method: String, mode: String },

    #[error("solve did not reach an optimum (status {0:?})")]
    NonOptimal(SolveStatus),

    #[error("solution file references unknown variable '{0}'")]
    UnknownSolutionName(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
