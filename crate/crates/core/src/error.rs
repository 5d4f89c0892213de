use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scene description or input record failed validation.
    #[error("invalid {entity}: {reason}")]
    Validation { entity: String, reason: String },

    /// Geometry queries returned something a closed scene can never produce.
    #[error("geometry inconsistency: {0}")]
    Geometry(String),

    #[error("unknown opening `{0}`")]
    UnknownOpening(String),

    #[error("invalid source: {0}")]
    InvalidSource(String),

    /// The balance or transport system has no bounded solution.
    #[error("singular system: {0}")]
    Singular(String),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:.3e}, spectral radius estimate {spectral_radius:.6})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        spectral_radius: f64,
    },

    #[error("key mismatch between result tables:\n{0}")]
    KeyMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn validation(entity: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            entity: entity.into(),
            reason: reason.into(),
        }
    }
}
