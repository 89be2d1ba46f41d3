//! Errors surfaced to the command line, with stable machine-readable kinds.

use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] episeg::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A cell that could not be parsed. Rows are 1-based over data rows,
    /// columns 1-based over fields.
    #[error("{path} row {row} column {column}: {message}")]
    Parse { path: PathBuf, row: usize, column: usize, message: String },

    /// Cumulative counts must never decrease.
    #[error("{path} row {row}: cumulative count falls from {prev} to {current}")]
    NonMonotone { path: PathBuf, row: usize, prev: u64, current: u64 },

    /// Cumulative counts cannot exceed the declared population.
    #[error("{path} row {row}: cumulative count {count} exceeds population {population}")]
    PopulationExceeded { path: PathBuf, row: usize, count: u64, population: u64 },

    /// A file-level structural problem: missing metadata, bad header,
    /// malformed JSON.
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("configuration error: {0}")]
    Config(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Model(inner) => inner.kind(),
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::NonMonotone { .. } => "nonmonotone",
            CliError::PopulationExceeded { .. } => "population-exceeded",
            CliError::Format { .. } => "format",
            CliError::Config(_) => "config",
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorEnvelope<'a> {
    error: ErrorBody<'a>,
}

/// Renders the error as the JSON document printed on failure.
pub fn render_error(err: &CliError) -> String {
    let envelope = ErrorEnvelope {
        error: ErrorBody { kind: err.kind(), message: err.to_string() },
    };
    serde_json::to_string(&envelope).expect("error envelope serializes")
}

pub type Result<T> = std::result::Result<T, CliError>;
