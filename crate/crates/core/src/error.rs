use thiserror::Error;

/// Errors surfaced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field `{label}` has a non-finite value at index {index}")]
    NonFinite { label: String, index: usize },

    #[error("field `{label}` has {got} values, grid has {expected} points")]
    LengthMismatch {
        label: String,
        got: usize,
        expected: usize,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("scheme `{scheme}` requires a {required} grid")]
    SchemeMismatch {
        scheme: &'static str,
        required: &'static str,
    },

    #[error("empty window (t/2, t] at t = {t}")]
    EmptyWindow { t: f64 },

    #[error("quadrature did not reach tolerance {tol:e} (estimated error {estimate:e})")]
    Quadrature { tol: f64, estimate: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("blow-up at t = {time}: {reason}")]
    BlowUp { time: f64, reason: String },

    #[error("singular banded system (zero pivot in column {0})")]
    Singular(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
