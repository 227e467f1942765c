//! Scene-configuration search: particle swarm optimization, a
//! finite-difference ascent baseline, and synthetic score landscapes.

mod ascent;
mod config;
mod landscape;
mod pso;

use thiserror::Error;

pub use ascent::{finite_diff_ascent, AscentParams, AscentResult};
pub use config::{Bounds, ConfigVector, FnScorer, ScoreError, Scorer, DIMS_PER_OBJECT};
pub use landscape::{bundled_landscapes, make_landscape, Bump, BundledLandscape, Landscape, LandscapeKind, LandscapeMeta};
pub use pso::{run_pso, run_pso_seeded, pso_step, velocity_update, write_trace, PsoParams, PsoResult, Swarm, TraceRecord};

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("search space has no dimensions")]
    EmptyBounds,
    #[error("bounds of dimension {dim} are invalid: [{lower}, {upper}]")]
    InvalidBounds { dim: usize, lower: f64, upper: f64 },
    #[error("expected a {expected}-dimensional configuration, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error(transparent)]
    Score(#[from] ScoreError),
}
