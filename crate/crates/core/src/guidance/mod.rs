//! Score-distillation gradients, depth alignment, guidance schedules and
//! the alternating scene/layout optimization driver.

mod adam;
mod depth;
mod driver;
mod predictor;
mod schedule;
mod step;

use thiserror::Error;

pub use adam::{Adam, AdamParams, SceneOptimizer};
pub use depth::{depth_loss, solve_scale_bias, solve_scale_bias_with, ScaleBias};
pub use driver::{optimize_scene, RunConfig, RunObserver, RunSummary, SceneScorer, TraceCollector, TraceEvent};
pub use predictor::{distill_gradient, DiffusionStep, MockPredictor, NoisePredictor, PureNoise, Weighting};
pub use schedule::{schedule_at, GuidanceSchedule, ScheduleState};
pub use step::{
    total_gradient, DisparityOracle, GuidanceContext, LossReport, LuminanceDisparity, Predictors, RenderConfig, SceneGradient,
};

use crate::layout::{LayoutError, ScoreError};
use crate::render::RenderError;

#[derive(Debug, Error)]
pub enum GuidanceError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("service: {0}")]
    Service(String),
    #[error("{term} term failed: {source}")]
    Term {
        term: &'static str,
        #[source]
        source: Box<GuidanceError>,
    },
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl GuidanceError {
    /// Whether the failure came from an external service.
    pub fn is_external(&self) -> bool {
        match self {
            GuidanceError::Service(_) | GuidanceError::Score(ScoreError::Service(_)) => true,
            GuidanceError::Layout(LayoutError::Score(ScoreError::Service(_))) => true,
            GuidanceError::Term { source, .. } => source.is_external(),
            _ => false,
        }
    }
}
