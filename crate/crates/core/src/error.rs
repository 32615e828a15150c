use thiserror::Error;

/// Errors raised by the toolchain's library operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("degenerate knowledge entry for instance {0}: an explicit fallback is required")]
    DegenerateEntry(String),
    #[error("missing knowledge for instances: {}", .0.join(", "))]
    MissingKnowledge(Vec<String>),
    #[error("data integrity: {0}")]
    DataIntegrity(String),
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
