//! Library-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    /// A quantum number, rate, or geometric argument violated a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The Liouvillian kernel has dimension > 1; no unique steady state.
    #[error("degenerate steady state: {0}")]
    DegenerateSteadyState(String),

    /// A requested reconstruction lacks the spectral evidence it needs
    /// (e.g. no sigma peaks at a forbidden polarization angle).
    #[error("insufficient information: {0}")]
    InsufficientInformation(String),

    /// The bias-scan plan matrix has column rank < 3.
    #[error("degenerate bias-scan plan: {0}")]
    DegeneratePlan(String),

    /// E and B are (numerically) parallel; no plane-wave propagation axis.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// Richardson extrapolation failed its ratio test; both estimates attached.
    #[error("derivative unstable: coarse {coarse:e}, fine {fine:e}")]
    DerivativeUnstable { coarse: f64, fine: f64 },

    /// Scenario file / override problems, naming the offending key.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
