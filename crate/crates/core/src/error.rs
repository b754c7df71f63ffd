use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Exact enumeration would visit more configurations than allowed.
    #[error("exact enumeration needs {required} configurations but the budget is {budget}; use sampling instead")]
    BudgetExceeded { required: u128, budget: u64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),

    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: &'static str, reason: String },

    #[error("dimension error: {0}")]
    Dimension(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
