use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} needs {qubits} qubits, limit is {limit}")]
    Capacity {
        what: &'static str,
        qubits: usize,
        limit: usize,
    },

    #[error("value outside domain: {0}")]
    Domain(String),

    #[error("time {t} outside [0, {tau}]")]
    Range { t: f64, tau: f64 },

    #[error("operator is not Hermitian (deviation {0:e})")]
    NonHermitian(f64),

    #[error("unsupported ansatz: {0}")]
    UnsupportedAnsatz(String),

    #[error("expected {expected} parameters, got {found}")]
    Arity { expected: usize, found: usize },

    #[error("rotation angle undefined (both components vanish)")]
    UndefinedAngle,

    #[error("norm drifted by {drift:e}")]
    NormDrift { drift: f64 },

    #[error("optimizer failed at grid point {index} (t = {t}): {reason}")]
    Optimizer { index: usize, t: f64, reason: String },

    #[error("inconsistent constraint counts: {0}")]
    InconsistentCounts(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
