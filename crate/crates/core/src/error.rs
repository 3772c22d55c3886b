use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid format: {0}")]
    Format(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("group element is singular in slot {slot}")]
    Singular { slot: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("classification violated: input likely degenerate or implementation bug ({0})")]
    ClassificationViolated(String),

    #[error("canonicalization unverified: {0}")]
    CanonicalizationUnverified(String),

    #[error("diagonalization failed: {0}")]
    DiagonalizationFailed(String),

    #[error("infeasible fixture: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
