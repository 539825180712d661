use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error at line {line}, column `{column}`: {message}")]
    Validation {
        line: usize,
        column: String,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("balance error: {0}")]
    Balance(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("fold error: {0}")]
    Fold(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("importance error: {0}")]
    Importance(String),

    #[error("unsupported model `{model}`: {reason}")]
    UnsupportedModel { model: String, reason: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Coarse error category, used by the command line to pick an exit code.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::UnsupportedModel { .. } => ErrorKind::Config,
            Error::Fit(_) | Error::Importance(_) => ErrorKind::Fit,
            Error::Json(e) if e.is_syntax() || e.is_data() => ErrorKind::Config,
            _ => ErrorKind::Data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Fit,
}
