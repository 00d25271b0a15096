use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied malformed or inconsistent input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The instance failed validation; every violation is listed.
    #[error("invalid instance: {}", .0.join("; "))]
    InvalidInstance(Vec<String>),

    /// An internal invariant of the algorithm was broken. Always a bug.
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    /// An exact search ran out of its node or time budget.
    #[error("search budget exceeded after {nodes} nodes")]
    BudgetExceeded { nodes: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
