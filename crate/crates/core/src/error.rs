use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("model specification error: {0}")]
    Spec(String),

    #[error("singular design matrix; offending columns: {0:?}")]
    SingularDesign(Vec<String>),

    #[error("degenerate (zero-variance after demeaning) columns: {0:?}")]
    DegenerateColumns(Vec<String>),

    #[error("inference error: {0}")]
    Inference(String),

    #[error("series alignment error: {0}")]
    Alignment(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
