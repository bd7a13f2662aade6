//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by construction and training routines.
///
/// Invalid inputs are reported eagerly at API boundaries; numerical
/// routines themselves do not panic on well-formed inputs.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A point ended up with no above-threshold neighbor, so its degree
    /// (and therefore its normalized weights) would be undefined.
    #[error("point {index} is isolated: no neighbor above the kernel threshold")]
    IsolatedPoint {
        /// Index of the isolated point in the input order.
        index: usize,
    },

    /// No path exists between the requested grid nodes.
    #[error("no path from start {start:?} to goal {goal:?}")]
    NoPath {
        /// Start node in grid coordinates.
        start: (usize, usize),
        /// Goal node in grid coordinates.
        goal: (usize, usize),
    },

    /// Underlying I/O failure while reading a dataset file.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A dataset file exists but its contents cannot be interpreted.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Convenience constructor for precondition violations.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
