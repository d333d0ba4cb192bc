use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("fractional order must be nonnegative, got {0}")]
    NegativeOrder(f64),

    #[error("grid mismatch: expected {expected}, got {found}")]
    GridMismatch { expected: String, found: String },

    #[error("invalid mode count {requested} (grid holds {available} modes)")]
    InvalidModeCount { requested: usize, available: usize },

    #[error("ALE map is not injective (min jacobian {min_jacobian:.6e})")]
    NonInjective { min_jacobian: f64 },

    #[error("linear solver did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    SolverDiverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("assembled system is structurally singular: {0}")]
    SingularSystem(String),

    #[error("{0}")]
    OutOfRange(String),

    #[error("incompatible test pair: {0}")]
    IncompatibleTest(String),

    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),

    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
