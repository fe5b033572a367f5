//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by model construction, training, and analysis.
#[derive(Debug, Error)]
pub enum Error {
    /// An input vector or matrix had the wrong dimensions.
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A configuration value violated its documented constraints.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A linear-algebra step failed (singular system, non-SPD matrix, ...).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The parameter iteration left the admissible region. The update rule
    /// assumes the parameter sequence stays almost surely bounded; once the
    /// norm passes the configured ceiling we stop instead of emitting NaNs.
    #[error(
        "parameter divergence at update {update}: |theta| = {norm:.3e} exceeds ceiling {ceiling:.3e} \
         (the iteration assumes an almost-surely bounded parameter sequence)"
    )]
    Divergence {
        update: usize,
        norm: f64,
        ceiling: f64,
    },

    /// A gradient or reward evaluated to NaN/Inf during training.
    #[error("non-finite value at update {update}: {what}")]
    NonFinite { update: usize, what: &'static str },

    /// File input/output failed.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A config or report document failed to parse or violated the schema.
    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
