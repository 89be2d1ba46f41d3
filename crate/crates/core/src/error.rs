//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, samplers, and post-processing.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data or configuration violates a structural invariant.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A density or draw was requested outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested run cannot be performed on this series (e.g. too many
    /// segments for the minimum-length constraint).
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// An indicator move was requested on a state with no movable change point.
    #[error("no free change point available")]
    NoFreeChangePoint,

    /// A summary was requested over an empty trace.
    #[error("empty trace")]
    EmptyTrace,

    /// Two sequences that must align have different lengths.
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
}

impl Error {
    /// Stable machine-readable tag for each error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Invalid(_) => "invalid-input",
            Error::Domain(_) => "domain",
            Error::Infeasible(_) => "infeasible",
            Error::NoFreeChangePoint => "no-free-change-point",
            Error::EmptyTrace => "empty-trace",
            Error::LengthMismatch(_) => "length-mismatch",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
