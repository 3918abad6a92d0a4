use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{key}`: {reason}")]
    InvalidParam { key: String, reason: String },

    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),

    #[error("degenerate link: user and gNB are co-located")]
    DegenerateLink,

    #[error("infeasible scenario: {0}")]
    Infeasible(String),

    #[error("search space of {size} candidates exceeds the enumeration budget of {budget}")]
    BudgetExceeded { size: f64, budget: f64 },

    #[error("satisfied-users ratio is undefined without active users")]
    EmptyRatio,

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("malformed table: {0}")]
    Table(String),
}

impl Error {
    pub(crate) fn param(key: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
