//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, GabError>;

#[derive(Debug, Error)]
pub enum GabError {
    /// A model spec failed validation; the report lists every violated invariant.
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    /// Stationarity denominators are non-positive; no unconditional mean exists.
    #[error("degenerate mean: {0}")]
    DegenerateMean(String),

    /// Requested operation is undefined for this family.
    #[error("unsupported for family {family}: {what}")]
    Unsupported { family: &'static str, what: &'static str },

    /// Power iteration exhausted its iteration cap.
    #[error("spectral radius did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    /// Every optimizer start failed to converge.
    #[error("no optimizer start converged ({starts} starts, best gradient norm {best_grad_norm:.3e})")]
    NoConvergence { starts: usize, best_grad_norm: f64 },

    /// Fisher information has a near-zero eigenvalue; parameters are not identified.
    #[error("singular information matrix (min eigenvalue {min_eigenvalue:.3e})")]
    SingularInformation { min_eigenvalue: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Evaluation left its mathematical domain (e.g. nonlinear g outside [0,1]).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown catalog id: {0}")]
    UnknownCatalog(String),

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl GabError {
    /// True for failures of numerical procedures (as opposed to bad inputs).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            GabError::NonConvergence { .. }
                | GabError::NoConvergence { .. }
                | GabError::SingularInformation { .. }
        )
    }
}
