use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or argument failed validation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An environment generator refused its parameters.
    #[error("generator rejected parameters: {0}")]
    Generator(String),

    #[error("{what} index {index} out of range (valid: {valid})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        valid: String,
    },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),

    #[error("replication {index}: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn generator(msg: impl Into<String>) -> Self {
        Error::Generator(msg.into())
    }

    /// True when the root cause is a generator rejection.
    pub fn is_generator_rejection(&self) -> bool {
        match self {
            Error::Generator(_) => true,
            Error::Replication { source, .. } => source.is_generator_rejection(),
            _ => false,
        }
    }
}
