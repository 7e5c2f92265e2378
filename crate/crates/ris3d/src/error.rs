//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum RisError {
    /// Invalid geometry (array dimensions, degenerate points, ...).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Invalid scenario / configuration input.
    #[error("config error: {0}")]
    Config(String),

    /// Invalid argument to a processing or reconstruction operation.
    #[error("processing error: {0}")]
    Processing(String),

    /// Malformed or mismatched on-disk artifact.
    #[error("format error: {0}")]
    Format(String),

    /// Acquisition backend failure, with the beam it occurred at when known.
    #[error("backend error{}: {message}", beam.map(|b| format!(" at beam {b}")).unwrap_or_default())]
    Backend {
        /// Beam index the failure occurred at, if applicable.
        beam: Option<usize>,
        /// Human-readable cause.
        message: String,
    },

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RisError {
    pub(crate) fn backend(beam: Option<usize>, message: impl Into<String>) -> Self {
        RisError::Backend {
            beam,
            message: message.into(),
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, RisError>;
