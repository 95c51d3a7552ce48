//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by graph mutation, parsing, and query validation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("update timestamp {got} is not greater than the last applied timestamp {last}")]
    NonMonotonicTimestamp { last: u64, got: u64 },

    #[error("sliding window is empty")]
    EmptyWindow,

    #[error("unknown user vertex {0}")]
    UnknownUser(u64),

    #[error("unknown item vertex {0}")]
    UnknownItem(u64),

    #[error("edge ({user}, {item}) not present")]
    MissingEdge { user: u64, item: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph has {edges} edges, oracle cap is {cap}")]
    OracleTooLarge { edges: usize, cap: usize },

    #[error("unknown query id {0}")]
    UnknownQuery(u64),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
