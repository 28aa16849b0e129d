//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by validation, data loading, and pricing routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid input: {message}")]
    InvalidInput {
        /// Explanation of the violated precondition.
        message: String,
    },

    /// Input data (CSV rows, price series) failed structural validation.
    #[error("data error: {message}")]
    Data {
        /// Explanation of the structural problem.
        message: String,
    },

    /// The market configuration does not admit the requested measure:
    /// the branch system is singular or too close to singular to solve.
    #[error("degenerate market: {message}")]
    DegenerateMarket {
        /// Explanation, including the determinant magnitude and threshold.
        message: String,
    },

    /// An underlying I/O operation failed.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// CSV parsing failed at the format level.
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Shorthand constructor for [`Error::InvalidInput`].
    pub fn invalid_input(message: impl Into<String>) -> Self {
        Error::InvalidInput {
            message: message.into(),
        }
    }

    /// Shorthand constructor for [`Error::Data`].
    pub fn data(message: impl Into<String>) -> Self {
        Error::Data {
            message: message.into(),
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
