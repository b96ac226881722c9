//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A point, block index, or parameter is outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two objects that must live in the same ambient group do not.
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),

    /// A modified type cannot be realized at the requested level `n`.
    #[error("type {type_key} is not realizable at n = {n} (needs {needed} blocks)")]
    Unrealizable {
        type_key: String,
        n: usize,
        needed: usize,
    },

    /// A computation was refused because it exceeds a built-in size ceiling.
    #[error("size limit: {0}")]
    SizeLimit(String),

    /// An edge-replacement step failed validation.
    #[error("invalid evolution step {index}: {reason}")]
    InvalidEvolution { index: usize, reason: String },

    /// An exact identity that the mathematics guarantees failed to hold.
    /// This always indicates a bug, never bad input.
    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),

    /// A requested constant has not been computed or verified yet.
    #[error("missing dependency: {0}")]
    MissingConstant(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
