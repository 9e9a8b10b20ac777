use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("config: {0}")]
    Parse(String),

    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },

    #[error("unknown experiment `{name}`; registered: {available}")]
    UnknownExperiment { name: String, available: String },

    #[error("unknown suite `{name}`; registered: {available}")]
    UnknownSuite { name: String, available: String },

    #[error(transparent)]
    Core(#[from] clv_core::Error),

    #[error("writing output: {0}")]
    Output(String),
}

impl HarnessError {
    pub fn field(field: &str, message: impl Into<String>) -> Self {
        HarnessError::Field { field: field.to_string(), message: message.into() }
    }

    // serde_json already names unknown and missing fields in its message.
    pub(crate) fn from_parse(e: serde_json::Error) -> Self {
        HarnessError::Parse(e.to_string())
    }

    /// Usage and configuration problems map to exit code 2; the rest are runtime failures.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            HarnessError::Parse(_)
                | HarnessError::Field { .. }
                | HarnessError::UnknownExperiment { .. }
                | HarnessError::UnknownSuite { .. }
                | HarnessError::Io { .. }
        )
    }
}
