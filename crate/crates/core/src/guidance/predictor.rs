use rand::Rng;
use rand_distr::StandardNormal;

use crate::imaging::ImageBuf;

use super::GuidanceError;

/// How the distillation gradient is weighted over timesteps.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Weighting {
    Constant { value: f64 },
    /// `w(t) = 1 − ᾱ_t`.
    OneMinusAlphaBar,
}

impl Default for Weighting {
    fn default() -> Self {
        Weighting::Constant { value: 1.0 }
    }
}

impl Weighting {
    pub fn at(&self, alpha_bar: f64) -> f64 {
        match self {
            Weighting::Constant { value } => *value,
            Weighting::OneMinusAlphaBar => 1.0 - alpha_bar,
        }
    }
}

/// A diffusion timestep with its noise draw. Noising follows the linear
/// schedule `ᾱ_t = 1 − t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionStep {
    pub t: f64,
    pub alpha_bar: f64,
    pub weight: f64,
    /// Standard normal noise, shaped like the image being distilled.
    pub noise: ImageBuf,
}

impl DiffusionStep {
    pub fn new(t: f64, noise: ImageBuf, weighting: &Weighting) -> Self {
        assert!(t > 0.0 && t < 1.0, "timestep must lie in (0, 1)");
        let alpha_bar = 1.0 - t;
        Self {
            t,
            alpha_bar,
            weight: weighting.at(alpha_bar),
            noise,
        }
    }

    /// `t ~ U[t_min, t_max]` and i.i.d. standard normal noise.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, like: &ImageBuf, t_min: f64, t_max: f64, weighting: &Weighting) -> Self {
        let t = t_min + (t_max - t_min) * rng.random::<f64>();
        let data = (0..like.data.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        Self::new(t, ImageBuf::from_vec(like.width, like.height, like.channels, data), weighting)
    }

    /// `x_t = √ᾱ·x + √(1−ᾱ)·ε`.
    pub fn noised(&self, x: &ImageBuf) -> ImageBuf {
        let (a, b) = (self.alpha_bar.sqrt(), (1.0 - self.alpha_bar).sqrt());
        let data = x.data.iter().zip(&self.noise.data).map(|(x, e)| a * x + b * e).collect();
        ImageBuf::from_vec(x.width, x.height, x.channels, data)
    }

    /// Clean image implied by `x_t` and the injected noise.
    pub fn denoised(&self, x_t: &ImageBuf) -> ImageBuf {
        let (a, b) = (self.alpha_bar.sqrt(), (1.0 - self.alpha_bar).sqrt());
        let data = x_t.data.iter().zip(&self.noise.data).map(|(x, e)| (x - b * e) / a).collect();
        ImageBuf::from_vec(x_t.width, x_t.height, x_t.channels, data)
    }
}

/// Noise prediction `ε̂(x_t, prompt, t)`.
pub trait NoisePredictor: Sync {
    fn predict(&self, x_t: &ImageBuf, prompt: &str, step: &DiffusionStep) -> Result<ImageBuf, GuidanceError>;
}

/// Returns the injected noise: the plain score-distillation baseline.
#[derive(Debug, Clone, Copy, Default)]
pub struct PureNoise;

impl NoisePredictor for PureNoise {
    fn predict(&self, _x_t: &ImageBuf, _prompt: &str, step: &DiffusionStep) -> Result<ImageBuf, GuidanceError> {
        Ok(step.noise.clone())
    }
}

/// `ε̂ = ε + κ(x − x*)` where `x` is the clean image recovered from `x_t`:
/// a predictor whose distillation gradient points away from `target`.
#[derive(Debug, Clone)]
pub struct MockPredictor {
    pub target: ImageBuf,
    pub kappa: f64,
}

impl MockPredictor {
    pub fn new(target: ImageBuf, kappa: f64) -> Self {
        Self { target, kappa }
    }
}

impl NoisePredictor for MockPredictor {
    fn predict(&self, x_t: &ImageBuf, _prompt: &str, step: &DiffusionStep) -> Result<ImageBuf, GuidanceError> {
        if !x_t.same_shape(&self.target) {
            return Err(GuidanceError::Shape(format!(
                "mock target is {}×{}×{}, input {}×{}×{}",
                self.target.width, self.target.height, self.target.channels, x_t.width, x_t.height, x_t.channels
            )));
        }
        let x0 = step.denoised(x_t);
        let data = step
            .noise
            .data
            .iter()
            .zip(x0.data.iter().zip(&self.target.data))
            .map(|(e, (x, t))| e + self.kappa * (x - t))
            .collect();
        Ok(ImageBuf::from_vec(x_t.width, x_t.height, x_t.channels, data))
    }
}

/// `w(t)·(primary(x_t) − baseline(x_t))` with `x` clamped to `[0, 1]`
/// before noising. A [`PureNoise`] baseline gives score distillation; a
/// second adapted predictor gives the variational form.
pub fn distill_gradient<P, B>(primary: &P, baseline: &B, x: &ImageBuf, prompt: &str, step: &DiffusionStep) -> Result<ImageBuf, GuidanceError>
where
    P: NoisePredictor + ?Sized,
    B: NoisePredictor + ?Sized,
{
    assert!(x.same_shape(&step.noise), "noise draw does not match the image shape");
    let x_t = step.noised(&x.clamped01());
    let a = primary.predict(&x_t, prompt, step)?;
    let b = baseline.predict(&x_t, prompt, step)?;
    for out in [&a, &b] {
        if !out.same_shape(x) {
            return Err(GuidanceError::Shape("predictor output shape differs from its input".into()));
        }
    }
    let data = a.data.iter().zip(&b.data).map(|(p, q)| step.weight * (p - q)).collect();
    Ok(ImageBuf::from_vec(x.width, x.height, x.channels, data))
}
