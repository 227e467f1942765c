use serde::{Deserialize, Serialize};

use crate::field::GridGrad;
use crate::imaging::ImageBuf;
use crate::render::{
    rasterize, render_panorama, render_perspective, sample_pano_camera, sample_perspective_camera, CompositeMode,
    PerspectiveSampling, VolumeSettings,
};
use crate::rng::{mix_seed, substream, tag};
use crate::scene::SceneState;
use crate::Color;

use super::depth::depth_loss;
use super::predictor::{distill_gradient, DiffusionStep, NoisePredictor, Weighting};
use super::schedule::{schedule_at, GuidanceSchedule};
use super::GuidanceError;

/// Monocular disparity estimate for an RGB image (up to scale and shift).
pub trait DisparityOracle: Sync {
    /// Returns a 1-channel image with the input's width and height.
    fn estimate(&self, rgb: &ImageBuf) -> Result<ImageBuf, GuidanceError>;
}

/// Predicts disparity as image luminance.
#[derive(Debug, Clone, Copy, Default)]
pub struct LuminanceDisparity;

impl DisparityOracle for LuminanceDisparity {
    fn estimate(&self, rgb: &ImageBuf) -> Result<ImageBuf, GuidanceError> {
        Ok(ImageBuf::from_vec(rgb.width, rgb.height, 1, rgb.luminance()))
    }
}

/// Rendering choices for guidance views.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderConfig {
    pub volume: VolumeSettings,
    pub mode: CompositeMode,
    pub perspective: PerspectiveSampling,
    pub pano_width: usize,
    pub pano_height: usize,
    /// Jitter ray samples within their strata (seeded per pixel and
    /// iteration); otherwise stratum midpoints are used.
    pub jitter: bool,
    pub weighting: Weighting,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            volume: VolumeSettings::default(),
            mode: CompositeMode::Hard,
            perspective: PerspectiveSampling::default(),
            pano_width: 512,
            pano_height: 256,
            jitter: true,
            weighting: Weighting::default(),
        }
    }
}

/// Noise predictors for the perspective and panoramic terms, each with its
/// baseline (pure noise for score distillation).
#[derive(Clone, Copy)]
pub struct Predictors<'a> {
    pub perspective: &'a dyn NoisePredictor,
    pub perspective_baseline: &'a dyn NoisePredictor,
    pub panorama: &'a dyn NoisePredictor,
    pub panorama_baseline: &'a dyn NoisePredictor,
}

#[derive(Clone, Copy)]
pub struct GuidanceContext<'a> {
    pub predictors: Predictors<'a>,
    pub oracle: &'a dyn DisparityOracle,
    pub prompt: &'a str,
    pub render: &'a RenderConfig,
}

/// Gradient of the weighted loss with respect to trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneGradient {
    pub grid: GridGrad,
    /// Per object, per object-space vertex.
    pub mesh_colors: Vec<Vec<Color>>,
}

impl SceneGradient {
    pub fn zeros_like(state: &SceneState) -> Self {
        Self {
            grid: GridGrad::zeros_like(&state.grid),
            mesh_colors: state.objects.iter().map(|o| vec![Color::zeros(); o.mesh.positions.len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &SceneGradient) {
        self.grid.add_assign(&other.grid);
        for (a, b) in self.mesh_colors.iter_mut().zip(&other.mesh_colors) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.grid.is_zero() && self.mesh_colors.iter().flatten().all(|c| *c == Color::zeros())
    }

    pub fn norm(&self) -> f64 {
        let m: f64 = self.mesh_colors.iter().flatten().map(|c| c.norm_squared()).sum();
        (self.grid.norm().powi(2) + m).sqrt()
    }
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub iter: u64,
    pub t_max: f64,
    pub pano_enabled: bool,
    pub lambda_pers: f64,
    pub lambda_pano: f64,
    pub lambda_dep: f64,
    /// Norm of the weighted perspective distillation image gradient.
    pub pers_grad_norm: f64,
    pub pano_grad_norm: f64,
    /// Aligned disparity MSE of the perspective view (unweighted).
    pub depth_loss: Option<f64>,
    pub grad_norm: f64,
}

const TERM_PERSPECTIVE: u64 = 1;
const TERM_PANORAMA: u64 = 2;

fn term_err(term: &'static str) -> impl Fn(GuidanceError) -> GuidanceError {
    move |e| GuidanceError::Term {
        term,
        source: Box::new(e),
    }
}

fn norm(img: &ImageBuf) -> f64 {
    img.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn scaled(img: &ImageBuf, s: f64) -> ImageBuf {
    ImageBuf::from_vec(img.width, img.height, img.channels, img.data.iter().map(|v| v * s).collect())
}

/// Weighted sum of the perspective distillation, panoramic RGB-D
/// distillation and depth alignment gradients at one iteration.
///
/// Every random draw comes from a sub-stream of `(seed, iter)`, and the
/// draws do not depend on which terms are enabled. Terms whose weight is
/// zero are not evaluated at all. If any term fails, nothing is returned.
pub fn total_gradient(
    state: &SceneState,
    ctx: &GuidanceContext,
    schedule: &GuidanceSchedule,
    iter: u64,
    seed: u64,
) -> Result<(SceneGradient, LossReport), GuidanceError> {
    let sched = schedule_at(schedule, iter);
    let cfg = ctx.render;
    let jitter = cfg.jitter.then(|| mix_seed(&[tag::RAY_JITTER, seed, iter]));
    let pers_cam = sample_perspective_camera(&mut substream(&[tag::PERSPECTIVE, seed, iter]), &state.center, state.radius, &cfg.perspective)?;
    let pano_cam = sample_pano_camera(
        &mut substream(&[tag::PANORAMA, seed, iter]),
        &state.center,
        state.radius,
        cfg.pano_width,
        cfg.pano_height,
    )?;

    let mut report = LossReport {
        iter,
        t_max: sched.t_max,
        pano_enabled: sched.pano_enabled,
        lambda_pers: sched.lambda_pers,
        lambda_pano: sched.lambda_pano_effective,
        lambda_dep: sched.lambda_dep,
        pers_grad_norm: 0.0,
        pano_grad_norm: 0.0,
        depth_loss: None,
        grad_norm: 0.0,
    };
    let mut total = SceneGradient::zeros_like(state);

    if sched.lambda_pers != 0.0 || sched.lambda_dep != 0.0 {
        let meshes = state.posed_meshes();
        let gbuf = rasterize(&meshes, &pers_cam);
        let view = render_perspective(&gbuf, &state.grid, &pers_cam, cfg.mode, &cfg.volume, jitter);
        let rgb = &view.products.rgb;
        let mut d_rgb = ImageBuf::new(rgb.width, rgb.height, 3);
        let mut d_disp = ImageBuf::new(rgb.width, rgb.height, 1);
        if sched.lambda_pers != 0.0 {
            let mut rng = substream(&[tag::DIFFUSION, seed, iter, TERM_PERSPECTIVE]);
            let step = DiffusionStep::sample(&mut rng, rgb, schedule.t_min, sched.t_max, &cfg.weighting);
            let g = distill_gradient(ctx.predictors.perspective, ctx.predictors.perspective_baseline, rgb, ctx.prompt, &step)
                .map_err(term_err("perspective"))?;
            d_rgb = scaled(&g, sched.lambda_pers);
            report.pers_grad_norm = norm(&d_rgb);
        }
        if sched.lambda_dep != 0.0 {
            let predicted = ctx.oracle.estimate(rgb).map_err(term_err("depth"))?;
            let (loss, g) = depth_loss(&view.products.disparity.data, &predicted.data).map_err(term_err("depth"))?;
            report.depth_loss = Some(loss);
            d_disp = ImageBuf::from_vec(rgb.width, rgb.height, 1, g.iter().map(|v| v * sched.lambda_dep).collect());
        }
        let vg = view.backward(&state.grid, &meshes, &d_rgb, &d_disp);
        total.grid.add_assign(&vg.grid);
        // depth gradients never reach mesh colors: mesh disparity does not
        // depend on them
        total.mesh_colors = vg.mesh_colors;
    }

    if sched.lambda_pano_effective != 0.0 {
        let view = render_panorama(&state.grid, &pano_cam, &cfg.volume, jitter);
        let rgbd = ImageBuf::concat_channels(&view.products.rgb, &view.products.disparity);
        let mut rng = substream(&[tag::DIFFUSION, seed, iter, TERM_PANORAMA]);
        let step = DiffusionStep::sample(&mut rng, &rgbd, schedule.t_min, sched.t_max, &cfg.weighting);
        let g = distill_gradient(ctx.predictors.panorama, ctx.predictors.panorama_baseline, &rgbd, ctx.prompt, &step)
            .map_err(term_err("panorama"))?;
        let g = scaled(&g, sched.lambda_pano_effective);
        report.pano_grad_norm = norm(&g);
        let vg = view.backward(&state.grid, &[], &g.channel_slice(0, 3), &g.channel_slice(3, 1));
        total.grid.add_assign(&vg.grid);
    }

    report.grad_norm = total.norm();
    Ok((total, report))
}
