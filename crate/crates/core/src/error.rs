use thiserror::Error;

/// Errors produced by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },

    #[error("recession limit did not converge at direction {direction} (spread {spread:.3e})")]
    RecessionDiverged { direction: String, spread: f64 },

    #[error("growth violation: f(tA)/t = {value:.6e} exceeds bound {bound:.6e} at t = {t:.3e}")]
    GrowthViolation { value: f64, bound: f64, t: f64 },

    #[error("inclusion not solvable: discrete operator residual {residual:.6e} exceeds tolerance {tol:.6e}")]
    NotSolvable { residual: f64, tol: f64 },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("search aborted: {0}")]
    SearchAborted(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
