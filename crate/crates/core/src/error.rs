use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid Beta parameters B({alpha_heads}, {alpha_tails}): both must be >= 1")]
    InvalidBeta { alpha_heads: u32, alpha_tails: u32 },

    #[error("coin index {index} out of range for {n} coins")]
    InvalidCoin { index: usize, n: usize },

    #[error("flip cost {cost} exceeds remaining budget {remaining}")]
    BudgetExceeded { cost: u32, remaining: u32 },

    #[error("no coin is affordable with remaining budget {remaining}")]
    NoAffordableCoin { remaining: u32 },

    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("CDF product degree {degree} exceeds cap {cap}")]
    DegreeOverflow { degree: usize, cap: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index search did not converge after {iterations} iterations")]
    Nonconvergence { iterations: usize },

    #[error("malformed strategy tree: {0}")]
    MalformedTree(String),

    #[error("instance too large for exact solver: {0}")]
    InstanceTooLarge(String),

    #[error("invalid policy identifier `{0}`")]
    InvalidPolicy(String),

    #[error("{field}: {message}")]
    Config { field: String, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
