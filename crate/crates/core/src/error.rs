use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot compose an empty plate list")]
    EmptyComposition,

    #[error("map size mismatch: {left} vs {right} pixels per side")]
    SizeMismatch { left: usize, right: usize },

    #[error("invalid {what}: {reason}")]
    InvalidInput { what: &'static str, reason: String },

    #[error("degenerate process draw: zero-length rotation axis")]
    DegenerateProcess,

    #[error("non-finite observation at pixel (row {row}, col {col})")]
    NonFiniteObservation { row: usize, col: usize },

    #[error("corrupt dataset: {file} is {actual} bytes, expected {expected}")]
    CorruptDataset {
        file: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("unsupported dataset format version {0}")]
    UnsupportedVersion(u32),

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("sample index {index} out of range for {count} samples")]
    SampleOutOfRange { index: usize, count: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            what,
            reason: reason.into(),
        }
    }
}
