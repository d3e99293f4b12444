use thiserror::Error;

/// Errors raised by the library. Every variant maps onto a precondition
/// stated on the operation that returns it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected} qubits, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("unsupported parameters: {0}")]
    Unsupported(String),

    #[error("singular readout model: {0}")]
    SingularModel(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
