use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("{0}")]
    Domain(String),

    #[error("value {value} is not in the range of f (supremum {sup})")]
    OutOfRange { value: f64, sup: f64 },

    #[error("null space dimension exceeds 1")]
    NullSpaceTooLarge,

    #[error("enumeration needs {required} subsets but the budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// Malformed input: bad grids, bad matrix files, inconsistent parameters.
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for numeric-domain failures, false for malformed input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::OutOfRange { .. }
                | Error::NullSpaceTooLarge
                | Error::BudgetExceeded { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
