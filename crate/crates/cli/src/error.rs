use std::path::{Path, PathBuf};

use sizecover_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("cannot write {path}: {message}")]
    Write { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: topology differs from the first mesh ({message})")]
    Topology { path: PathBuf, message: String },
    #[error("{path}: landmark vertex {index} out of range for {len} vertices")]
    Landmark { path: PathBuf, index: usize, len: usize },
    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

impl PipelineError {
    /// 1 usage, 2 data, 3 size-cap refusal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Core(CoreError::SizeCap(_)) => 3,
            Self::Core(CoreError::InvalidK(_) | CoreError::InvalidShift(_) | CoreError::ShiftDimension(_)) => 1,
            _ => 2,
        }
    }

    pub(crate) fn read(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::Read { path: path.to_path_buf(), message: err.to_string() }
    }

    pub(crate) fn write(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::Write { path: path.to_path_buf(), message: err.to_string() }
    }

    pub(crate) fn parse(path: &Path, message: impl Into<String>) -> Self {
        Self::Parse { path: path.to_path_buf(), message: message.into() }
    }
}
