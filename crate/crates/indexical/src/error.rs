//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by loaders, metrics, and pipelines.
///
/// The CLI maps variants to exit codes: validation-class errors (bad input
/// data, violated preconditions, degenerate geometry) exit with 1; I/O and
/// protocol errors exit with 2.
#[derive(Debug, Error)]
pub enum Error {
    /// A line of an input file could not be parsed.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Input data violates a documented invariant.
    #[error("validation: {0}")]
    Validation(String),

    /// Vector dimensions disagree.
    #[error("dimension mismatch: {context} (expected {expected}, found {found})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: String,
    },

    /// Zero covariance, equal means, or another geometric degeneracy.
    #[error("degenerate: {0}")]
    Degenerate(String),

    /// Exhaustive enumeration refused; the caller should use the
    /// stochastic approximation instead.
    #[error(
        "exact extrema refused for n={n} (limit {limit}); use approximate normalization"
    )]
    ExactLimitExceeded { n: usize, limit: usize },

    /// The embedding endpoint returned a malformed or misaligned response.
    #[error("protocol: {0}")]
    Protocol(String),

    /// HTTP transport failure (after retries, where applicable).
    #[error("http: {0}")]
    Http(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 for validation errors, 2 for
    /// I/O and protocol errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::DimensionMismatch { .. }
            | Error::Degenerate(_)
            | Error::ExactLimitExceeded { .. } => 1,
            Error::Protocol(_) | Error::Http(_) | Error::Io(_) => 2,
        }
    }

    /// Shorthand for [`Error::Validation`].
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Shorthand for [`Error::Parse`].
    pub fn parse(path: &str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            msg: msg.into(),
        }
    }
}
