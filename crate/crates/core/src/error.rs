use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Wrong magic bytes or an unsupported layout.
    #[error("format error at byte {offset}: {msg}")]
    Format { offset: usize, msg: String },

    /// Structurally valid header but the payload is damaged or truncated.
    #[error("corrupt payload at byte {offset}: {msg}")]
    Corrupt { offset: usize, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    /// A query needed at least one learned centroid.
    #[error("no model: the store holds no centroids")]
    NoModel,

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Process exit code: 1 for validation failures, 2 for I/O and format problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::NoModel | Error::Divergence { .. } => 1,
            Error::Io { .. } | Error::Format { .. } | Error::Corrupt { .. } | Error::Serde(_) => 2,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
