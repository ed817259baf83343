use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the matte pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A per-pixel 3x3 system had a nonpositive pivot during LDL factorization.
    #[error("singular system at pixel ({x}, {y}): pivot d{pivot} = {value:e}")]
    SingularSystem {
        x: usize,
        y: usize,
        pivot: u8,
        value: f64,
    },

    #[error("no sky pixels available as density-estimation reference")]
    EmptyReference,

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Codec { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn codec(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Codec {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
