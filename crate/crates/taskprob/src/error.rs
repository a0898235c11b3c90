use taskprob_core::ModelError;
use taskprob_core::synth::SynthError;

use crate::config::ConfigError;
use crate::io::{LoadError, WriteError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Load(#[from] LoadError),
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("cannot write {0}")]
    Write(#[from] WriteError),
    #[error("synthetic generator: {0}")]
    Synth(#[from] SynthError),
    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) | AppError::Synth(_) => EXIT_VALIDATION,
            AppError::Load(LoadError::Io { .. }) => EXIT_IO,
            AppError::Load(_) => EXIT_VALIDATION,
            AppError::Model(
                ModelError::Solver { .. } | ModelError::Infeasible(_) | ModelError::Unbounded(_),
            ) => EXIT_SOLVER,
            AppError::Model(_) => EXIT_VALIDATION,
            AppError::Write(_) | AppError::Io { .. } => EXIT_IO,
        }
    }
}
