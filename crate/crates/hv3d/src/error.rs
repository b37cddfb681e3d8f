use std::path::{Path, PathBuf};

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by file ingestion, validation, and the scoring pipeline.
#[derive(Debug, Error)]
pub enum Error {
    // The cause is baked into the message rather than exposed as a source so
    // chain-printing reporters don't repeat it.
    #[error("{path}: {cause}")]
    Io {
        path: PathBuf,
        cause: std::io::Error,
    },

    #[error(
        "{path}: {actual} bytes is not a whole number of {frame_bytes}-byte \
         {width}x{height} yuv420p frames (expected {expected} bytes)"
    )]
    TruncatedYuv {
        path: PathBuf,
        width: usize,
        height: usize,
        frame_bytes: u64,
        actual: u64,
        expected: u64,
    },

    #[error("yuv420p requires even frame dimensions, got {width}x{height}")]
    OddDimensions { width: usize, height: usize },

    #[error("{path}: {actual} bytes of disparity data, expected {expected} for {width}x{height}")]
    DisparitySize {
        path: PathBuf,
        width: usize,
        height: usize,
        expected: u64,
        actual: u64,
    },

    #[error("{path}: {detail}")]
    MalformedPgm { path: PathBuf, detail: String },

    #[error("{path}: pgm maxval {maxval} exceeds the supported 8-bit range")]
    UnsupportedBitDepth { path: PathBuf, maxval: u32 },

    #[error("manifest {path}: {detail}")]
    Manifest { path: PathBuf, detail: String },

    #[error("{0}")]
    Dimension(String),

    #[error("{0}")]
    InvalidParam(String),

    #[error("{0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            cause: source,
        }
    }

    pub(crate) fn manifest(path: impl AsRef<Path>, detail: impl Into<String>) -> Self {
        Error::Manifest {
            path: path.as_ref().to_path_buf(),
            detail: detail.into(),
        }
    }

    pub(crate) fn dimension(detail: impl Into<String>) -> Self {
        Error::Dimension(detail.into())
    }

    pub(crate) fn invalid(detail: impl Into<String>) -> Self {
        Error::InvalidParam(detail.into())
    }

    pub(crate) fn degenerate(detail: impl Into<String>) -> Self {
        Error::Degenerate(detail.into())
    }
}
