use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("orbit length {requested} exceeds the configured cap {cap}")]
    OrbitLengthExceeded { requested: u64, cap: u64 },

    #[error("unknown system identifier `{0}`")]
    UnknownSystem(String),

    #[error("splitting did not converge: residual {residual:e} above tolerance {tolerance:e}")]
    NoConvergence { residual: f64, tolerance: f64 },

    #[error("restricted cocycle is numerically singular")]
    SingularRestriction,

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("mesh blow-up: {vertices} vertices exceed the cap {cap}")]
    MeshBlowup { vertices: usize, cap: usize },

    #[error("{skipped} of {total} grid points failed to converge (more than 1%)")]
    TooManySkipped { skipped: usize, total: usize },

    #[error("{field}: {message}")]
    InvalidParameter { field: String, message: String },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl LabError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        LabError::InvalidParameter { field: field.into(), message: message.into() }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::InvalidParameter { .. }
            | LabError::UnknownSystem(_)
            | LabError::Parse(_)
            | LabError::Json(_)
            | LabError::UnsupportedDimension(_)
            | LabError::OrbitLengthExceeded { .. } => 2,
            LabError::NoConvergence { .. }
            | LabError::SingularRestriction
            | LabError::MeshBlowup { .. }
            | LabError::TooManySkipped { .. } => 3,
            LabError::Io(_) | LabError::Csv(_) => 1,
        }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
