use std::path::PathBuf;

use cothinker_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    /// 2 usage, 3 config, 4 file access, 5 backend, 6 replay divergence,
    /// 7 malformed transcript, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 2,
            AppError::Config(_) => 3,
            AppError::Io { .. } => 4,
            AppError::Core(e) => match e {
                CoreError::InvalidConfig { .. } => 3,
                CoreError::InvalidTask(_) => 2,
                CoreError::BackendUnavailable { .. }
                | CoreError::Rejected { .. }
                | CoreError::MalformedResponse { .. } => 5,
                CoreError::ReplayDivergence { .. } => 6,
                CoreError::MalformedTranscript(_) => 7,
                CoreError::Sink(_) => 4,
                _ => 1,
            },
        }
    }
}
