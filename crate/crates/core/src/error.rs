use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to decode {format} image: {message}")]
    Decode { format: String, message: String },

    #[error("failed to encode {format} image: {message}")]
    Encode { format: &'static str, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid translation parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Attaches the file a lower-level error came from.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File { path: path.into(), source: Box::new(self) }
    }

    /// True for errors caused by the caller's arguments rather than I/O or data.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Argument(_) | Error::InvalidParams(_) => true,
            Error::File { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
