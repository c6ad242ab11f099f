use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The rotation system does not describe a consistent embedding.
    #[error("embedding error: {0}")]
    Embedding(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("unsupported graph: {0}")]
    Unsupported(String),
    /// An exhaustive computation would exceed its state-space guard.
    #[error("state space too large: {what} (estimated {estimate}, limit {limit})")]
    Guard {
        what: String,
        estimate: f64,
        limit: f64,
    },
    /// A current with sources was handed to an operation that needs a sourceless one.
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
