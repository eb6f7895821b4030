use std::path::PathBuf;

use thiserror::Error;

use crate::integral::Rect;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("window {rect:?} is empty after clipping to {width}x{height}")]
    DegenerateWindow {
        rect: Rect,
        width: usize,
        height: usize,
    },

    #[error("cannot decode image: {0}")]
    Decode(String),

    #[error("layer directory integrity: {0}")]
    Integrity(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
