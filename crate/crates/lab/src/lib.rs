//! Experiment driver for `sofic-core`: TOML configs, a rayon job runner, and JSON/CSV
//! report files. The `sofic-lab` binary is a thin wrapper over [`commands`].

pub mod commands;
pub mod config;
pub mod report;
pub mod run;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(#[from] config::ConfigError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Entropy(#[from] sofic_core::entropy::EntropyError),
    #[error("{0}")]
    Model(#[from] sofic_core::model::ModelError),
    #[error("invariant failure: {0}")]
    Invariant(String),
}

impl LabError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Config(_) => 2,
            _ => 1,
        }
    }
}
