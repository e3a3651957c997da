//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("register of {requested} qubits exceeds the maximum of {max}")]
    SizeOverflow { requested: usize, max: usize },

    #[error("table length mismatch: {left} vs {right} in {context}")]
    LengthMismatch {
        left: usize,
        right: usize,
        context: &'static str,
    },

    #[error("degenerate objective: {0}")]
    Degenerate(String),

    #[error("vanishing success probability q = {q:.3e} at layer {layer}")]
    VanishingSuccess { layer: usize, q: f64 },

    #[error("non-finite {what} at parameters {params:?}")]
    NonFinite { what: &'static str, params: Vec<f64> },

    #[error("dataset line {line}: {message}")]
    Dataset { line: usize, message: String },

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("{0} out of supported range")]
    Range(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
