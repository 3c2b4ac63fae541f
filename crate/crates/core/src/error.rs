use thiserror::Error;

/// Errors raised by the library.
///
/// The CLI maps [`Error::Invariant`] to a numeric-failure exit code and every
/// other variant to a schema failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("exact enumeration limit exceeded: {0}")]
    LimitExceeded(String),

    #[error("numerical invariant violated: {0}")]
    Invariant(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
