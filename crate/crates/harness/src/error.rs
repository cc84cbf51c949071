use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes of the command-line tool.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const RUN_FAULT: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const ACCEPTANCE: i32 = 3;
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] horizon_core::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("log mismatch: {0}")]
    Log(String),

    #[error("server: {0}")]
    Server(String),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Core(horizon_core::Error::Config(_)) => exit::CONFIG,
            _ => exit::RUN_FAULT,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
