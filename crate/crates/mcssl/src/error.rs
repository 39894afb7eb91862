use std::path::{Path, PathBuf};

/// Failure of a command, mapped onto the process exit status.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] mcssl_core::Error),
    #[error("{0}")]
    NonConvergence(String),
}

impl AppError {
    pub fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        AppError::Parse { path: path.to_path_buf(), line, message: message.into() }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        AppError::Io { path: path.to_path_buf(), source }
    }

    /// 2 for bad input, 3 for violated preconditions, 4 for an unconverged
    /// sampler.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Parse { .. } | AppError::Io { .. } | AppError::Usage(_) => 2,
            AppError::Core(_) => 3,
            AppError::NonConvergence(_) => 4,
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
