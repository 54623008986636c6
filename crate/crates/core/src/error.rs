use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not a weight sequence: {0}")]
    NotAWeightSequence(String),

    #[error("truncation mismatch: {left} vs {right}")]
    TruncationMismatch { left: usize, right: usize },

    #[error("index {index} out of range (max {max})")]
    IndexOutOfRange { index: usize, max: usize },

    /// `log t` beyond the last breakpoint; `required_k` estimates the truncation needed.
    #[error("log t = {logt} exceeds domain cap {cap}; truncation K >= {required_k} needed")]
    TruncationExceeded { logt: f64, cap: f64, required_k: usize },

    #[error("tail diverges: exponent {k} needs truncation K > {}", k + 1.0)]
    TailDivergent { k: f64, truncation: usize },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("profile does not decay on the integration range")]
    NonDecaying,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("term budget exceeded: {terms} > {budget}")]
    BudgetExceeded { terms: usize, budget: usize },

    #[error("bump fit failed: {0}")]
    FitFailed(String),

    #[error("config error at line {line}, column {column}: {message}")]
    Config { message: String, line: usize, column: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config {
            message: e.to_string(),
            line: e.line(),
            column: e.column(),
        }
    }
}
