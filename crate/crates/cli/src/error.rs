use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("config {path}: {reason}")]
    Config { path: PathBuf, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Volume {
        path: PathBuf,
        #[source]
        source: tumorsim::Error,
    },

    #[error("sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<CliError>,
    },

    #[error(transparent)]
    Core(#[from] tumorsim::Error),

    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 success, 1 usage or config, 2 IO, 3 verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            CliError::Io { .. } => 2,
            CliError::Volume { source, .. } | CliError::Core(source) => match source {
                tumorsim::Error::Io { .. }
                | tumorsim::Error::Sidecar { .. }
                | tumorsim::Error::SizeMismatch { .. }
                | tumorsim::Error::UnsupportedFormat(_) => 2,
                _ => 1,
            },
            CliError::Sample { source, .. } => source.exit_code(),
            CliError::Verification(_) => 3,
        }
    }
}
