//! Client for the model scoring service, the JSON wire types, and an
//! in-process fake server implementing the same protocol.

mod client;
pub mod fake;
pub mod wire;

use thiserror::Error;

pub use client::{ClientStats, ServiceClient, ServiceEndpoint};
pub use fake::{FakeConfig, FakeFault, FakeServer, FakeTarget};

use crate::guidance::{DiffusionStep, DisparityOracle, GuidanceError, NoisePredictor};
use crate::imaging::{ImageBuf, ImageError};
use crate::layout::ScoreError;
use crate::metrics::{FeatureExtractor, MetricsError};
use crate::scoring::ImageSimilarity;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid endpoint: {0}")]
    Config(String),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u64, message: String },
    #[error("request rejected (HTTP {status}, {code}): {message}")]
    Request { status: u16, code: String, message: String },
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error(transparent)]
    Image(#[from] ImageError),
}

impl From<ServiceError> for GuidanceError {
    fn from(e: ServiceError) -> Self {
        GuidanceError::Service(e.to_string())
    }
}

impl From<ServiceError> for ScoreError {
    fn from(e: ServiceError) -> Self {
        ScoreError::Service(e.to_string())
    }
}

impl From<ServiceError> for MetricsError {
    fn from(e: ServiceError) -> Self {
        MetricsError::Service(e.to_string())
    }
}

impl ImageSimilarity for ServiceClient {
    fn similarity(&self, image: &ImageBuf, prompt: &str) -> Result<f64, ScoreError> {
        Ok(self.score_image(image, prompt)?)
    }
}

impl DisparityOracle for ServiceClient {
    fn estimate(&self, rgb: &ImageBuf) -> Result<ImageBuf, GuidanceError> {
        Ok(self.estimate_disparity(rgb)?)
    }
}

impl NoisePredictor for ServiceClient {
    fn predict(&self, x_t: &ImageBuf, prompt: &str, step: &DiffusionStep) -> Result<ImageBuf, GuidanceError> {
        Ok(self.denoise(x_t, prompt, step)?)
    }
}

/// Deep features of one network layer, fetched from the service.
#[derive(Debug, Clone, Copy)]
pub struct RemoteFeatures<'a> {
    pub client: &'a ServiceClient,
    pub layer: usize,
}

impl FeatureExtractor for RemoteFeatures<'_> {
    fn extract(&self, image: &ImageBuf) -> Result<Vec<f64>, MetricsError> {
        Ok(self.client.deep_features(image, self.layer)?)
    }
}
