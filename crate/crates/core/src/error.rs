use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseRationalError(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("series truncation policies differ")]
    PolicyMismatch,
    #[error("truncation policy too tight: {0}")]
    PolicyTooTight(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("reduction not applicable: {0}")]
    NotApplicable(&'static str),
    #[error("target unsupported: {0}")]
    TargetUnsupported(String),
    #[error("cache mismatch: {0}")]
    CacheMismatch(String),
    #[error("operator index {0} is not supported (need n >= -1)")]
    UnsupportedIndex(i64),
    #[error("unknown identity {0:?}")]
    UnknownIdentity(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<ParseRationalError> for Error {
    fn from(e: ParseRationalError) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
