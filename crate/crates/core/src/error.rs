use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed sidecar {path}: field `{field}`: {reason}")]
    Sidecar {
        path: PathBuf,
        field: &'static str,
        reason: String,
    },

    #[error("payload size mismatch: expected {expected} bytes, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("non-finite value at linear index {index}")]
    NonFinite { index: usize },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimsMismatch { left: [usize; 3], right: [usize; 3] },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty region: {0}")]
    EmptyRegion(&'static str),

    #[error("mask value {value} at linear index {index} is not 0 or 1")]
    NotBinary { index: usize, value: f32 },

    #[error("degenerate mesh: no surface crossing along direction {direction:?}")]
    DegenerateMesh { direction: [f64; 3] },

    #[error("missing field `{0}` required by the active loss weights")]
    MissingField(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
