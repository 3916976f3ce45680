use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the arguments was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Tensor or layer dimensions do not agree.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Malformed or inconsistent data file.
    #[error("data error: {0}")]
    Data(String),
    /// Configuration could not be parsed or is inconsistent.
    #[error("config error: {0}")]
    Config(String),
    /// Loss or parameters became non-finite.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
