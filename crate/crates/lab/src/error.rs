use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] bflab_core::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown preset {0:?}; expected one of {1}")]
    UnknownPreset(String, String),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn config_err(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}
