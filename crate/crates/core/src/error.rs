use thiserror::Error;

/// Errors raised by the model, environments and harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn dims(what: &'static str, expected: usize, actual: usize) -> Self {
        Error::DimMismatch {
            what,
            expected,
            actual,
        }
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// Process exit status used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::DimMismatch { .. } | Error::NonFinite(_) | Error::Contract(_) => 3,
            Error::Io(_) => 4,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
