//! Layout scoring by rendering a candidate configuration and comparing the
//! views against a text prompt.

use rayon::prelude::*;

use crate::guidance::SceneScorer;
use crate::imaging::ImageBuf;
use crate::layout::ScoreError;
use crate::render::{
    rasterize, render_perspective, sample_perspective_camera, CompositeMode, PerspectiveCamera, PerspectiveSampling,
    VolumeSettings,
};
use crate::rng::{substream, tag};
use crate::scene::SceneState;

/// Text-image similarity, higher is better.
pub trait ImageSimilarity: Sync {
    fn similarity(&self, image: &ImageBuf, prompt: &str) -> Result<f64, ScoreError>;
}

/// `1 - mean|image - target|` over RGB, ignoring the prompt.
#[derive(Debug, Clone)]
pub struct TargetSimilarity {
    pub target: ImageBuf,
}

impl ImageSimilarity for TargetSimilarity {
    fn similarity(&self, image: &ImageBuf, _prompt: &str) -> Result<f64, ScoreError> {
        if (image.width, image.height) != (self.target.width, self.target.height) {
            return Err(ScoreError::Other("image and target sizes differ".into()));
        }
        let mut total = 0.0;
        for y in 0..image.height {
            for x in 0..image.width {
                for c in 0..3 {
                    total += (image.get(x, y, c) - self.target.get(x, y, c.min(self.target.channels - 1))).abs();
                }
            }
        }
        Ok(1.0 - total / (image.width * image.height * 3) as f64)
    }
}

/// Mean similarity over a fixed set of views of the scene posed by the
/// candidate configuration. Views are drawn once, at construction.
pub struct RenderScorer<'a> {
    pub similarity: &'a dyn ImageSimilarity,
    pub prompt: String,
    pub cameras: Vec<PerspectiveCamera>,
    pub mode: CompositeMode,
    pub volume: VolumeSettings,
}

impl<'a> RenderScorer<'a> {
    pub const DEFAULT_VIEWS: usize = 4;

    pub fn new(
        similarity: &'a dyn ImageSimilarity,
        prompt: impl Into<String>,
        state: &SceneState,
        sampling: &PerspectiveSampling,
        n_views: usize,
        seed: u64,
    ) -> Result<Self, ScoreError> {
        let cameras = (0..n_views as u64)
            .map(|v| {
                let mut rng = substream(&[tag::SCORER_VIEWS, seed, v]);
                sample_perspective_camera(&mut rng, &state.center, state.radius, sampling)
                    .map_err(|e| ScoreError::Other(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            similarity,
            prompt: prompt.into(),
            cameras,
            mode: CompositeMode::Hard,
            volume: VolumeSettings::default(),
        })
    }

    /// Renders the views for `config`.
    pub fn render_views(&self, state: &SceneState, config: &[f64]) -> Vec<ImageBuf> {
        let meshes = state.posed_meshes_for(config);
        self.cameras
            .par_iter()
            .map(|cam| {
                let gbuf = rasterize(&meshes, cam);
                render_perspective(&gbuf, &state.grid, cam, self.mode, &self.volume, None)
                    .products
                    .rgb
            })
            .collect()
    }
}

impl SceneScorer for RenderScorer<'_> {
    fn score_config(&self, state: &SceneState, config: &[f64]) -> Result<f64, ScoreError> {
        if self.cameras.is_empty() {
            return Err(ScoreError::Other("no scoring views".into()));
        }
        let expected = state.config().0.len();
        if config.len() != expected {
            return Err(ScoreError::Dimension {
                expected,
                got: config.len(),
            });
        }
        let mut total = 0.0;
        for view in self.render_views(state, config) {
            total += self.similarity.similarity(&view, &self.prompt)?;
        }
        let mean = total / self.cameras.len() as f64;
        if mean.is_finite() {
            Ok(mean)
        } else {
            Err(ScoreError::NonFinite)
        }
    }
}
