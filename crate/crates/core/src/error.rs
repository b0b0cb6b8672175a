use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("map is not injective: {0}")]
    NotInjective(String),
    #[error("embedding is not isometric: {0}")]
    NotIsometric(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("internal check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
