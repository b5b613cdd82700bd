use thiserror::Error;

/// Errors surfaced by every module. Each variant falls into one of three
/// categories (validation, verification, budget) that the CLI maps onto
/// distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max |h - h*| = {0:.3e})")]
    NotHermitian(f64),

    #[error("eigenvalue {eigenvalue} lies within {margin:.1e} of window boundary {boundary}")]
    BoundaryAmbiguity {
        eigenvalue: f64,
        boundary: f64,
        margin: f64,
    },

    #[error("verification failed: {check} residual {residual:.3e} exceeds {threshold:.3e}")]
    Verification {
        check: String,
        residual: f64,
        threshold: f64,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("json error: {0}")]
    Json(String),
}

/// Coarse error category, used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Validation,
    Verification,
    Budget,
}

impl Error {
    pub fn category(&self) -> Category {
        match self {
            Error::Verification { .. } | Error::Infeasible(_) => Category::Verification,
            Error::Budget(_) => Category::Budget,
            _ => Category::Validation,
        }
    }

    pub(crate) fn verification(check: impl Into<String>, residual: f64, threshold: f64) -> Self {
        Error::Verification {
            check: check.into(),
            residual,
            threshold,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
