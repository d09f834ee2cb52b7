use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CpeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{0} does not support a linear optimization oracle; use an enumeration backend")]
    UnsupportedOracle(&'static str),

    #[error("class has {count} hypotheses, above the enumeration cap of {cap}")]
    TooLarge { count: u128, cap: usize },

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error("budget {budget} is insufficient for {arms} arms")]
    InsufficientBudget { budget: usize, arms: usize },

    #[error("arm {0} does not appear in any symmetric difference with the reference hypothesis")]
    UndefinedArm(usize),

    #[error("invalid configuration `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
}

pub type Result<T> = std::result::Result<T, CpeError>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(CpeError::Dimension { expected, got })
    }
}
