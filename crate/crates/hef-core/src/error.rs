//! Error type shared by the whole crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HefError {
    /// Invalid configuration or arguments (maps to CLI exit code 2).
    #[error("config error: {0}")]
    Config(String),
    /// Shape/band/grid mismatch between operands.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Numeric failure at run time (maps to CLI exit code 3).
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    /// Malformed input file; carries a position annotation where known.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, HefError>;

impl HefError {
    /// CLI exit code associated with this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            HefError::Config(_) | HefError::Shape(_) | HefError::Parse(_) => 2,
            HefError::Numeric(_) | HefError::Io(_) => 3,
        }
    }

    /// Rewrite the message (e.g. to prepend the step or run that failed)
    /// without changing the error class.
    pub fn map_msg(self, f: impl FnOnce(String) -> String) -> HefError {
        match self {
            HefError::Config(m) => HefError::Config(f(m)),
            HefError::Shape(m) => HefError::Shape(f(m)),
            HefError::Numeric(m) => HefError::Numeric(f(m)),
            HefError::Parse(m) => HefError::Parse(f(m)),
            HefError::Io(e) => HefError::Io(std::io::Error::new(e.kind(), f(e.to_string()))),
        }
    }
}
