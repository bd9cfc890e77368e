use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("{file}: row {row}, column `{column}`: {message}")]
    Data {
        file: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("market did not clear")]
    NotCleared,

    #[error("generator `{0}` not found")]
    UnknownGenerator(String),

    #[error("hour {hour}: energy market LP is {status}")]
    Dispatch { hour: usize, status: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
