use std::path::PathBuf;

use normid_core::ErrorKind;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] normid_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    InFile { path: PathBuf, source: Box<CliError> },
    #[error("run {index}: {source}")]
    InRun { index: usize, source: Box<CliError> },
}

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const NO_PARSE: i32 = 3;
    pub const DEPTH_CAP: i32 = 4;
    pub const GROUNDING: i32 = 5;
    pub const NO_COMPLIANT_PLAN: i32 = 6;
    pub const INVALID_THRESHOLD: i32 = 7;
    pub const IO: i32 = 8;
    pub const INVALID_INPUT: i32 = 9;
    pub const STATE_MISMATCH: i32 = 10;
}

impl CliError {
    pub fn in_file(self, path: &std::path::Path) -> Self {
        match self {
            e @ (CliError::Io { .. } | CliError::Json { .. } | CliError::InFile { .. }) => e,
            e => CliError::InFile { path: path.to_path_buf(), source: Box::new(e) },
        }
    }

    pub fn in_run(self, index: usize) -> Self {
        CliError::InRun { index, source: Box::new(self) }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Invalid => exit::INVALID_INPUT,
                ErrorKind::NoParse => exit::NO_PARSE,
                ErrorKind::StateMismatch => exit::STATE_MISMATCH,
                ErrorKind::DepthCapExceeded => exit::DEPTH_CAP,
                ErrorKind::GroundingExplosion => exit::GROUNDING,
                ErrorKind::NoCompliantPlan => exit::NO_COMPLIANT_PLAN,
                ErrorKind::InvalidThreshold => exit::INVALID_THRESHOLD,
            },
            CliError::Io { .. } => exit::IO,
            CliError::Json { .. } | CliError::Format(_) => exit::INVALID_INPUT,
            CliError::Usage(_) => exit::USAGE,
            CliError::InFile { source, .. } | CliError::InRun { source, .. } => source.exit_code(),
        }
    }
}
