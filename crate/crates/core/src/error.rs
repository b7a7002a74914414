use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("quadrature did not converge on [{a}, {b}]: estimated error {error:.3e}")]
    Quadrature { a: f64, b: f64, error: f64 },

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    LinearSolve { iterations: usize, residual: f64 },

    #[error("Newton iteration diverged at cell {cell} (residual {residual:.3e})")]
    Newton { cell: usize, residual: f64 },

    #[error("{field} became negative ({value:.3e}) at cell {cell}; {diagnostic}")]
    Negativity {
        field: &'static str,
        cell: usize,
        value: f64,
        diagnostic: String,
    },

    #[error("pressure decomposition failed: {0}")]
    Decomposition(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
