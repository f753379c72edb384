use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("zero correlation score for support index {0}")]
    ZeroScoreInSupport(usize),

    #[error("combinatorial budget exceeded: C(p, k) = {count} exceeds {budget}")]
    BudgetExceeded { count: u128, budget: u128 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A constructed object failed its own verification. Signals a bug.
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
