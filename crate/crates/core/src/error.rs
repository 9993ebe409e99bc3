use thiserror::Error;

pub type Result<T, E = FppError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FppError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("outside region: {0}")]
    OutOfRegion(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// Rejection sampling kept too few configurations within its budget.
    #[error("conditioning too rare: {accepted} accepted out of {budget} draws")]
    ConditioningTooRare { accepted: u64, budget: u64 },

    /// The conditioning event has probability zero.
    #[error("empty conditioning: P({0}) = 0")]
    EmptyConditioning(String),

    #[error("grid overflow: {states} states exceeds cap {cap}")]
    GridOverflow { states: u128, cap: u64 },

    #[error("undecidable tail: {0}")]
    UndecidableTail(String),

    #[error("weight {0} is not representable in the requested carrier")]
    Unrepresentable(String),
}

impl FppError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FppError::InvalidInput(msg.into())
    }
}
