use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNoConvergence { sweeps: usize, off_norm: f64 },

    #[error("congruence failed: residual off-diagonal mass {residual:e} exceeds {tolerance:e}")]
    Congruence { residual: f64, tolerance: f64 },

    #[error("block '{block}' is not SPD (pivot {pivot:e} at row {row})")]
    NotSpd {
        block: String,
        row: usize,
        pivot: f64,
    },

    #[error("system too large for dense spectrum: {size} unknowns exceeds cap {cap}; use the Lanczos estimate")]
    TooLarge { size: usize, cap: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
