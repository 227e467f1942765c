use std::path::PathBuf;

use scenecomp::field::FieldError;
use scenecomp::guidance::GuidanceError;
use scenecomp::imaging::ImageError;
use scenecomp::layout::{LayoutError, ScoreError};
use scenecomp::metrics::MetricsError;
use scenecomp::render::RenderError;
use scenecomp::scene::SceneError;
use scenecomp::service::ServiceError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("model service: {0}")]
    Service(String),
    #[error("writing {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// 0 success, 1 usage or parse failure, 2 external service failure,
    /// 3 internal invariant violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Input { .. } | CliError::Scene(_) => 1,
            CliError::Service(_) => 2,
            CliError::Output { .. } | CliError::Internal(_) => 3,
        }
    }

    pub fn input(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Input {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::Config(m) => CliError::Usage(m),
            other => CliError::Service(other.to_string()),
        }
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        match e {
            ScoreError::Service(m) => CliError::Service(m),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<LayoutError> for CliError {
    fn from(e: LayoutError) -> Self {
        match e {
            LayoutError::Score(s) => s.into(),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<GuidanceError> for CliError {
    fn from(e: GuidanceError) -> Self {
        if e.is_external() {
            CliError::Service(e.to_string())
        } else {
            CliError::Internal(e.to_string())
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Service(m) => CliError::Service(m),
            MetricsError::Guidance(g) => g.into(),
            MetricsError::Input(m) => CliError::Usage(m),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<RenderError> for CliError {
    fn from(e: RenderError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<ImageError> for CliError {
    fn from(e: ImageError) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        CliError::Internal(e.to_string())
    }
}
