use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum JrcError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The detected CSI cannot drive the equalizer (e.g. zero main-path value).
    #[error("degenerate CSI: {0}")]
    DegenerateCsi(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, JrcError>;

impl JrcError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        JrcError::Io {
            path: path.into(),
            source,
        }
    }
}
