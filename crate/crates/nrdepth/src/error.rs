//! Error type shared across the crate.

use std::path::PathBuf;

/// Errors produced by geometry, solver, evaluation and I/O operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration value (bad bounds, out-of-range rate, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Mismatched lengths or matrix dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A value outside its mathematical domain (nonpositive depth, score
    /// outside [0,1], ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An index or key that does not exist in the referenced collection.
    #[error("lookup error: {0}")]
    Lookup(String),

    /// Input data that cannot be processed (too few points, missing
    /// correspondences, ...).
    #[error("input error: {0}")]
    Input(String),

    /// Numerically degenerate data (all-zero distances, zero weight sum,
    /// zero median).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Malformed file contents; `offset` is the byte position at which the
    /// problem was detected.
    #[error("format error in {path:?} at byte {offset}: {message}")]
    Format {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    /// A file variant we recognise but do not handle (e.g. color PFM).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A non-finite value appeared where finite arithmetic is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI; each error category gets its own code.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 3,
            Error::Input(_) | Error::Lookup(_) => 4,
            Error::Io(_) => 5,
            Error::Format { .. } | Error::Unsupported(_) | Error::Json(_) => 6,
            Error::Dimension(_) | Error::Domain(_) => 7,
            Error::Degenerate(_) | Error::NonFinite(_) => 8,
        }
    }
}
