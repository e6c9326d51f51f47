use thiserror::Error;

/// Errors raised by the measurement pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter fell outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A serialized stream or file could not be decoded.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn format<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}
