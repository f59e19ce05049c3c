use thiserror::Error;

/// Errors raised by the moment engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("binding error: {0}")]
    Binding(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unsupported expression: {0}")]
    Unsupported(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("unbound symbol: {0}")]
    Unbound(String),
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
    #[error("unbounded system: variable {0} has no {1} bound")]
    Unbounded(usize, &'static str),
    #[error("cache format: {0}")]
    CacheFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity(_) => 3,
            _ => 2,
        }
    }
}
