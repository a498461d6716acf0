use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("{what} has {size} nodes, above the limit of {cap}; {hint}")]
    TooLarge {
        what: &'static str,
        size: usize,
        cap: usize,
        hint: &'static str,
    },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e}); epsilon is too large for this graph")]
    NotConverged { iterations: usize, residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
