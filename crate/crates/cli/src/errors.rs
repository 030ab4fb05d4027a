use std::process::ExitCode;
use thiserror::Error;

/// Exit codes: 1 usage, 2 data, 3 reproducibility divergence.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Divergence(String),
}

impl AppError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            AppError::Usage(_) => ExitCode::from(1),
            AppError::Data(_) => ExitCode::from(2),
            AppError::Divergence(_) => ExitCode::from(3),
        }
    }

    pub fn usage(msg: impl Into<String>) -> AppError {
        AppError::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> AppError {
        AppError::Data(msg.into())
    }
}

macro_rules! data_from {
    ($($ty:ty),+) => {
        $(impl From<$ty> for AppError {
            fn from(e: $ty) -> Self {
                AppError::Data(e.to_string())
            }
        })+
    };
}

data_from!(
    std::io::Error,
    serde_json::Error,
    satvq_core::cnf::CnfError,
    satvq_core::manifest::ManifestError,
    satvq_core::generators::GenError,
    satvq_core::model::TrainError,
    satvq_core::checkpoint::CheckpointError,
    satvq_core::embed::EmbedError,
    satvq_core::eval::EvalError
);
