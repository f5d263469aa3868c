use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
    #[error("bisection bracket does not enclose a sign change: {0}")]
    Bracket(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("domain too small: {0}")]
    Domain(String),
    #[error("linear solver failure: {0}")]
    Linear(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
