use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("subsystem label `{0}` appears more than once")]
    LabelCollision(String),

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("operator is not Hermitian (asymmetry norm {asymmetry:.3e} > {tolerance:.3e})")]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    #[error("operator is not positive semidefinite (minimum eigenvalue {min_eigenvalue:.3e}, tolerance {tolerance:.3e})")]
    NotPositive { min_eigenvalue: f64, tolerance: f64 },

    #[error("trace {trace} exceeds 1 beyond tolerance")]
    TraceExceeded { trace: f64 },

    #[error("state must be normalized, found trace {trace}")]
    NotNormalized { trace: f64 },

    #[error("channel is not trace preserving (deviation {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("constraint violated: {0}")]
    ConstraintViolated(String),

    #[error("pseudo-inverse failed: singular beyond cutoff {cutoff:.3e}")]
    Singular { cutoff: f64 },

    #[error("solver failure ({status}): {detail}")]
    Solver { status: String, detail: String },

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("malformed input `{path}`: field `{field}`: {detail}")]
    Malformed {
        path: String,
        field: String,
        detail: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
