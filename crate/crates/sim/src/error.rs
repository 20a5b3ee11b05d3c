use std::path::PathBuf;

use segstokes_core::Error as CoreError;
use thiserror::Error;

/// Failures of a harness run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot read config {path}: {source}")]
    ConfigFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed config: {0}")]
    ConfigSyntax(#[from] serde_json::Error),

    #[error(transparent)]
    Numerics(#[from] CoreError),

    #[error("output error at {path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl SimError {
    pub fn output(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        Self::Output {
            path: path.into(),
            message: err.to_string(),
        }
    }

    /// 2 config, 3 blow-up, 4 ill-conditioned solve, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::ConfigFile { .. } | Self::ConfigSyntax(_) => 2,
            Self::Numerics(e) => match e {
                CoreError::IllConditioned { .. } => 4,
                CoreError::BlowUp { .. } | CoreError::FrameDegeneracy { .. } | CoreError::WallViolation { .. } => 3,
                CoreError::InvalidParameter(_)
                | CoreError::CurvatureDomain(_)
                | CoreError::TooFewNodes { .. }
                | CoreError::DegenerateSegment(_) => 2,
                _ => 1,
            },
            Self::Output { .. } => 1,
        }
    }
}

pub type SimResult<T> = std::result::Result<T, SimError>;
