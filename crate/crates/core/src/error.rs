//! Crate-wide error type.
//!
//! Variants are grouped by how callers are expected to react: `Config` and
//! `Validation` mean the inputs were bad, `Collision` means an output
//! location is already occupied, everything else is a runtime failure. The
//! CLI maps these groups onto its exit-code contract.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad configuration or missing input (CLI exit code 2).
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data violates an invariant (CLI exit code 2).
    #[error("validation error: {0}")]
    Validation(String),

    /// Output path already exists and overwriting was not requested
    /// (CLI exit code 3).
    #[error("output collision: {path} already exists (pass --force to overwrite)")]
    Collision { path: PathBuf },

    /// Training diverged; the offending optimizer step is recorded.
    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: u64 },

    /// Checkpoint parameter shape differs from what the architecture expects.
    #[error("shape mismatch for layer `{layer}`: checkpoint has {found:?}, model expects {expected:?}")]
    ShapeMismatch {
        layer: String,
        found: Vec<usize>,
        expected: Vec<usize>,
    },

    /// Architecture name not present in the registry.
    #[error("unknown architecture `{name}`; registered: [{}]", available.join(", "))]
    UnknownArchitecture { name: String, available: Vec<String> },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {message}")]
    Image { path: PathBuf, message: String },

    /// Anything else that went wrong at runtime (CLI exit code 4).
    #[error("{0}")]
    Runtime(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        Error::Runtime(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
