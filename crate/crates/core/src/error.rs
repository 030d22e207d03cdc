use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KdrError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A retraction was asked to map a rank-deficient matrix onto the manifold.
    #[error("degenerate step: matrix is rank deficient")]
    DegenerateStep,

    #[error("column {column} has zero variance")]
    ConstantColumn { column: usize },

    #[error("unsupported response: {0}")]
    UnsupportedResponse(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, KdrError>;

impl From<std::io::Error> for KdrError {
    fn from(e: std::io::Error) -> Self {
        KdrError::Io(e.to_string())
    }
}
