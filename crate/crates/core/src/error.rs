use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("data error: {0}")]
    Data(String),

    /// The spectrum is not Hermitian enough to invert to a real image.
    #[error("symmetry error: imaginary residue {residue:e} exceeds bound {bound:e}")]
    Symmetry { residue: f64, bound: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("invalid schedule: {0}")]
    Schedule(String),

    /// Analytic and probe-measured coefficients disagree.
    #[error("internal consistency error: {0}")]
    InternalConsistency(String),

    #[error("oracle protocol error: {message}")]
    Protocol { message: String, output: String },

    #[error("oracle timed out after {0:?}")]
    Timeout(std::time::Duration),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
