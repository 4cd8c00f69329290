use thiserror::Error;

/// Errors raised by the numerical kernels and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("accuracy target not reached: {0}")]
    Accuracy(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unsupported time grid: {0}")]
    UnsupportedGrid(String),
    #[error("numeric failure at time index {index}: {message}")]
    Numeric { index: usize, message: String },
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),
}

impl Error {
    /// True for errors that stem from bad inputs rather than numerical breakdown.
    pub fn is_domain_like(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Precondition(_) | Error::Config(_) | Error::UnsupportedGrid(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
