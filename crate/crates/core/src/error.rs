//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the arguments was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A quantity that is forced by the mathematics came out wrong, e.g. a
    /// singular value that must equal 1 deviated beyond tolerance.
    #[error("internal consistency: {0}")]
    InternalConsistency(String),
    /// An input exceeded a documented size limit.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn inconsistent(msg: impl Into<String>) -> Self {
        Error::InternalConsistency(msg.into())
    }

    pub fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
