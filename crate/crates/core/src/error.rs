//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's preconditions.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Tensor or matrix shapes do not line up.
    #[error("shape error in {op}: expected {expected}, got {got}")]
    Shape {
        op: &'static str,
        expected: String,
        got: String,
    },

    /// The CSV header or row structure does not match the schema.
    #[error("csv schema error: {0}")]
    Schema(String),

    /// A cell failed to parse as the expected type.
    #[error("csv parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// Data violates a dataset invariant (missing value, ragged table, ...).
    #[error("data integrity error: {0}")]
    Integrity(String),

    /// Anomaly episodes could not be placed within the series.
    #[error("injection placement error: {0}")]
    Placement(String),

    /// Two sequences that must align have different lengths.
    #[error("alignment error: {0}")]
    Alignment(String),

    /// A numeric invariant broke (NaN/Inf during training).
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::Shape {
            op,
            expected: expected.into(),
            got: got.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
