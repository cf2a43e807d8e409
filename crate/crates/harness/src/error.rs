use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),

    #[error("report: {0}")]
    Report(String),

    #[error(transparent)]
    Core(#[from] rudd_core::Error),

    /// The message carries the cause; it is not chained as a source.
    #[error("{path}: {cause}")]
    Io { path: String, cause: std::io::Error },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

pub(crate) fn config(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> HarnessError {
    HarnessError::Io { path: path.as_ref().display().to_string(), cause: source }
}
