use thiserror::Error;

/// Errors raised by the precoding, lattice and prediction routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("rank deficient: smallest singular value {smallest:e} is below tolerance {tolerance:e}")]
    RankDeficient { smallest: f64, tolerance: f64 },

    #[error("objective matrix is not positive definite: eigenvalue {eigenvalue:e} at singular value {singular_value:e}")]
    NotPositive { eigenvalue: f64, singular_value: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("solver refused: {0}")]
    SolverRefused(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Whether the error comes from user-supplied configuration rather than
    /// from the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::SolverRefused(_) | Error::Dimension(_) | Error::Domain(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
