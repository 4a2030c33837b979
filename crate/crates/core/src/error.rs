use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite entry at position {0}")]
    NonFinite(usize),
    #[error("normal equations are singular (pivot {pivot:e} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },
    #[error("projection row has zero (weighted) norm")]
    ZeroRow,
    #[error("degenerate sampling distribution: matrix has zero Frobenius norm")]
    DegenerateDistribution,
    #[error("invalid sparsity {size}: must lie in [1, {max}]")]
    InvalidSparsity { size: usize, max: usize },
    #[error("variant {variant} does not support {columns} measurement vectors")]
    UnsupportedVariant { variant: &'static str, columns: usize },
    #[error("degenerate metric: {0}")]
    DegenerateMetric(&'static str),
    #[error("invalid experiment spec: {0}")]
    SpecValidation(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
