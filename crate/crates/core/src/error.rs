use std::fmt;

use thiserror::Error;

/// Machine-readable class of an [`Error`], used for CLI exit codes and the
/// C ABI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorClass {
    InvalidArgument,
    Conflict,
    NoPath,
    Precondition,
    Io,
    Parse,
}

impl ErrorClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorClass::InvalidArgument => "invalid-argument",
            ErrorClass::Conflict => "conflict",
            ErrorClass::NoPath => "no-path",
            ErrorClass::Precondition => "precondition",
            ErrorClass::Io => "io",
            ErrorClass::Parse => "parse",
        }
    }

    /// Process exit code for this class (0 is reserved for success).
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::InvalidArgument => 2,
            ErrorClass::Conflict => 3,
            ErrorClass::NoPath => 4,
            ErrorClass::Precondition => 5,
            ErrorClass::Io => 6,
            ErrorClass::Parse => 7,
        }
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("no path: {0}")]
    NoPath(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidArgument(_) => ErrorClass::InvalidArgument,
            Error::Conflict(_) => ErrorClass::Conflict,
            Error::NoPath(_) => ErrorClass::NoPath,
            Error::Precondition(_) => ErrorClass::Precondition,
            Error::Io { .. } => ErrorClass::Io,
            Error::Parse(_) => ErrorClass::Parse,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Parse(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse(err.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(err: toml::de::Error) -> Self {
        Error::Parse(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
