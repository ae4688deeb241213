//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A matrix argument was not square.
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    /// Two arguments disagreed on dimension.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A matrix or vector entry was NaN or infinite.
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    /// Infinite-horizon construction needs every eigenvalue strictly in the left half-plane.
    #[error("matrix is not Hurwitz: rightmost eigenvalue real part {rightmost:.6e}")]
    NotHurwitz { rightmost: f64 },

    /// Node index outside the system dimension.
    #[error("node index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    /// The Gramian of the requested actuator set is numerically singular.
    #[error("actuator set is not controllable: lambda_min = {lambda_min:.6e} <= tolerance {tol:.6e}")]
    NotControllable { lambda_min: f64, tol: f64 },

    /// Energy bound below the full-actuation minimum; no actuator set can meet it.
    #[error("energy bound {energy:.6e} is below the feasibility bound {bound:.6e}")]
    InfeasibleEnergy { energy: f64, bound: f64 },

    /// The regularized objective exceeds the bound even with every node actuated.
    #[error("no actuator set meets the bound at epsilon = {epsilon:.6e}; shrink epsilon or raise the bound")]
    InfeasibleForEpsilon { epsilon: f64 },

    /// Roundoff prevented a certified result.
    #[error("numerical conditioning failure: {0}")]
    NumericalConditioning(String),

    /// Invalid configuration or argument value.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
