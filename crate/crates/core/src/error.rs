//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    /// A configuration or input violated a stated requirement. The message
    /// names the violated invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A distribution fit could not be computed for the given input.
    #[error("degenerate fit: {0}")]
    Degenerate(String),

    /// An operation was invoked outside its contract (e.g. stepping a
    /// finished run).
    #[error("invalid state: {0}")]
    State(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
