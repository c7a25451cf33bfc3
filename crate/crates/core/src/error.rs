use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A numeric input outside the domain of the function (NaN, infinity, negative mean).
    #[error("domain error: {0}")]
    Domain(String),

    /// Construction-time validation of a parameter type failed.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("peak clipped: principal maximum sits on the grid boundary (index {index})")]
    PeakClipped { index: usize },

    #[error("line unresolved: no half-maximum crossing inside the grid")]
    LineUnresolved,

    #[error("bracket error: {0}")]
    Bracket(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("indeterminate: {0}")]
    Indeterminate(String),

    #[error("undefined estimator: {0}")]
    UndefinedEstimator(String),
}

impl Error {
    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidParameter(_) | Error::Domain(_))
    }
}
