//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CkmError {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("build error: {0}")]
    Build(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("query error: {0}")]
    Query(String),

    #[error("fit error: rank-deficient design in column `{column}`: {reason}")]
    Fit { column: &'static str, reason: String },

    #[error("problem too large: {0}")]
    Size(String),

    #[error("scene coverage error: {0}")]
    Coverage(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, CkmError>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(CkmError::Input(msg.into()))
}
