//! Crate-wide error type with CLI exit-code mapping.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad usage, unknown flags/kinds, malformed configuration.
    #[error("config error: {0}")]
    Config(String),
    /// Tensor shape disagreement in a layer or op.
    #[error("dimension error: {0}")]
    Dim(String),
    /// A documented API precondition was violated.
    #[error("contract error: {0}")]
    Contract(String),
    /// Procedural generation or episode sampling exhausted its retry budget.
    #[error("generation error: {0}")]
    Generation(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("data error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("data error: {0}")]
    Data(String),
}

impl Error {
    /// Exit-code mapping: 0 success, 1 usage/config, 2 contract/data, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Dim(_)
            | Error::Contract(_)
            | Error::Generation(_)
            | Error::Json(_)
            | Error::Data(_) => 2,
            Error::Io(_) => 3,
        }
    }
}
