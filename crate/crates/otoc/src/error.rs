use std::path::PathBuf;

use otoc_core::Error as CoreError;

pub type Result<T, E = AppError> = std::result::Result<T, E>;

/// Failures surfaced by the command-line tool, grouped by exit status.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{0}")]
    Verification(String),
}

impl AppError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        AppError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for bad input, 2 for failed numerical checks, 3 for capacity.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Core(CoreError::Capacity { .. }) => 3,
            AppError::Core(
                CoreError::Consistency { .. }
                | CoreError::Aliasing { .. }
                | CoreError::Eigen { .. }
                | CoreError::FitFailure { .. }
                | CoreError::CollapseInfeasible(_),
            )
            | AppError::Verification(_) => 2,
            _ => 1,
        }
    }
}
