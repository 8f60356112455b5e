use std::io;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed header or magic in an image or checkpoint file.
    #[error("malformed input at byte {offset}: {msg}")]
    Format { offset: usize, msg: String },

    #[error("truncated input: {0}")]
    Truncated(String),

    #[error("corrupt data: {0}")]
    Corrupt(String),

    #[error("unsupported format: {0}")]
    Unsupported(String),

    /// Value-level validation failure (non-finite samples, non-monotone CRF, ...).
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Tensor or image shape disagreement.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Training diverged; carries per-layer activation diagnostics.
    #[error("non-finite loss: {0}")]
    NonFinite(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable category, used in `error:<category>:` CLI output.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Format { .. } => "format",
            Error::Truncated(_) => "truncated",
            Error::Corrupt(_) => "corrupt",
            Error::Unsupported(_) => "unsupported",
            Error::Validation(_) => "validation",
            Error::Parameter(_) => "parameter",
            Error::Shape(_) => "shape",
            Error::NonFinite(_) => "nonfinite",
            Error::Usage(_) => "usage",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn format(offset: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
