//! Evaluation: retrieval average precision, aligned-disparity error,
//! Fréchet distance over image features, and image degradations.

mod clip;
mod corpus;
mod degrade;
mod features;
mod frechet;
mod report;

use thiserror::Error;

pub use clip::{clip_ap, SimilarityMatrix};
pub use corpus::synthetic_corpus;
pub use degrade::{degrade, Degradation, DegradationKind};
pub use features::{patch_features, FeatureExtractor, PatchFeatures, PATCH_GRID};
pub use frechet::{frechet_distance, FeatureSet, EIGEN_CLIP};
pub use report::{depth_align_metric, fid_monotonicity_report, spearman, EvalReport, FidReport};

use crate::guidance::GuidanceError;
use crate::imaging::ImageError;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("covariance is not positive semi-definite (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("feature service: {0}")]
    Service(String),
    #[error(transparent)]
    Guidance(#[from] GuidanceError),
    #[error(transparent)]
    Image(#[from] ImageError),
}
