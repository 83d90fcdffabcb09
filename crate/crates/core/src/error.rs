use thiserror::Error;

use crate::dataset::DatasetError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Dataset(#[from] DatasetError),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The instance is too large for the requested operation.
    #[error("{what} is capped at {cap}, requested {requested}")]
    CapExceeded {
        what: &'static str,
        cap: usize,
        requested: usize,
    },

    #[error("solve exceeded its time budget")]
    TimedOut,

    #[error("model document: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by caller input rather than internal failures.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::TimedOut)
    }
}
