use rand::Rng as _;

use crate::rng::{substream, tag};
use crate::{Color, Vec3};

use super::grid::{interpolate, RadianceGrid, Stencil};

/// Floor applied to sample depth before inversion for disparity.
pub const DISPARITY_EPS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    /// Unit length.
    pub direction: Vec3,
    pub near: f64,
    pub far: f64,
}

impl Ray {
    /// Normalizes `direction`. Panics on a zero direction or an empty
    /// `[near, far)` interval.
    pub fn new(origin: Vec3, direction: Vec3, near: f64, far: f64) -> Self {
        let len = direction.norm();
        assert!(len > 0.0 && len.is_finite(), "ray direction must be non-zero");
        assert!(0.0 <= near && near < far, "ray interval must satisfy 0 <= near < far");
        Self {
            origin,
            direction: direction / len,
            near,
            far,
        }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// Placement of samples inside their strata.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stratification {
    /// Sample at each stratum's midpoint.
    Midpoint,
    /// Uniform offset within each stratum, drawn from the given sub-stream.
    Jittered(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleSpec {
    pub n_samples: usize,
    pub stratification: Stratification,
}

impl SampleSpec {
    pub fn midpoint(n_samples: usize) -> Self {
        Self {
            n_samples,
            stratification: Stratification::Midpoint,
        }
    }

    pub fn jittered(n_samples: usize, seed: u64) -> Self {
        Self {
            n_samples,
            stratification: Stratification::Jittered(seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySample {
    pub t: f64,
    pub delta: f64,
    pub density: f64,
    pub color: Color,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayRender {
    pub color: Color,
    /// `Σ wᵢ tᵢ + T · end`, where `end` is the clipped far bound.
    pub expected_depth: f64,
    /// `Σ wᵢ / max(tᵢ, ε)`; the residual transmittance contributes nothing.
    pub disparity: f64,
    /// Residual transmittance `T = Π (1 − αᵢ)`.
    pub transmittance: f64,
    pub samples: Vec<RaySample>,
}

struct Sampled {
    t: f64,
    delta: f64,
    stencil: Option<Stencil>,
}

/// Sample positions along the ray: `n` equal strata on `[near, end)`,
/// `end = min(far, stop_depth)`.
fn sample_positions(grid: &RadianceGrid, ray: &Ray, spec: &SampleSpec, stop_depth: Option<f64>) -> (f64, Vec<Sampled>) {
    assert!(spec.n_samples >= 2, "render_ray needs at least 2 samples");
    let end = stop_depth.map_or(ray.far, |s| s.min(ray.far));
    if end <= ray.near {
        return (end, Vec::new());
    }
    let delta = (end - ray.near) / spec.n_samples as f64;
    let mut jitter = match spec.stratification {
        Stratification::Midpoint => None,
        Stratification::Jittered(seed) => Some(substream(&[tag::RAY_JITTER, seed])),
    };
    let samples = (0..spec.n_samples)
        .map(|i| {
            let u = jitter.as_mut().map_or(0.5, |r| r.random::<f64>());
            let t = ray.near + (i as f64 + u) * delta;
            Sampled {
                t,
                delta,
                stencil: grid.stencil(&ray.at(t)),
            }
        })
        .collect();
    (end, samples)
}

/// Emission–absorption quadrature along `ray`.
///
/// With `stop_depth` the march ends there (e.g. at an opaque mesh); a stop
/// at or before `near` yields black with full transmittance.
pub fn render_ray(grid: &RadianceGrid, ray: &Ray, spec: &SampleSpec, stop_depth: Option<f64>) -> RayRender {
    let (end, sampled) = sample_positions(grid, ray, spec, stop_depth);
    let mut transmittance = 1.0;
    let mut color = Color::zeros();
    let mut depth = 0.0;
    let mut disparity = 0.0;
    let mut samples = Vec::with_capacity(sampled.len());
    for s in sampled {
        let (sigma, c) = s.stencil.map_or((0.0, Color::zeros()), |st| interpolate(grid, &st));
        let survive = (-sigma * s.delta).exp();
        let weight = transmittance * (1.0 - survive);
        color += c * weight;
        depth += weight * s.t;
        disparity += weight / s.t.max(DISPARITY_EPS);
        transmittance *= survive;
        samples.push(RaySample {
            t: s.t,
            delta: s.delta,
            density: sigma,
            color: c,
            weight,
        });
    }
    RayRender {
        color,
        expected_depth: depth + transmittance * end,
        disparity,
        transmittance,
        samples,
    }
}

/// Upstream derivatives of a scalar loss with respect to one ray's outputs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RayUpstream {
    pub color: Color,
    pub disparity: f64,
    /// Derivative with respect to the residual transmittance, used when
    /// something behind the volume is blended in by `T`.
    pub transmittance: f64,
}

impl RayUpstream {
    pub fn is_zero(&self) -> bool {
        self.color == Color::zeros() && self.disparity == 0.0 && self.transmittance == 0.0
    }
}

/// Dense gradient buffers shaped like a [`RadianceGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridGrad {
    pub density: Vec<f64>,
    pub color: Vec<Color>,
}

impl GridGrad {
    pub fn zeros_like(grid: &RadianceGrid) -> Self {
        Self {
            density: vec![0.0; grid.node_count()],
            color: vec![Color::zeros(); grid.node_count()],
        }
    }

    pub fn add_assign(&mut self, other: &GridGrad) {
        for (a, b) in self.density.iter_mut().zip(&other.density) {
            *a += b;
        }
        for (a, b) in self.color.iter_mut().zip(&other.color) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.density.iter_mut().for_each(|d| *d *= s);
        self.color.iter_mut().for_each(|c| *c *= s);
    }

    pub fn is_zero(&self) -> bool {
        self.density.iter().all(|d| *d == 0.0) && self.color.iter().all(|c| *c == Color::zeros())
    }

    pub fn norm(&self) -> f64 {
        (self.density.iter().map(|d| d * d).sum::<f64>()
            + self.color.iter().map(|c| c.norm_squared()).sum::<f64>())
        .sqrt()
    }
}

/// Destination for per-node gradient contributions.
pub trait GradSink {
    fn add(&mut self, node: usize, d_density: f64, d_color: Color);
}

impl GradSink for GridGrad {
    fn add(&mut self, node: usize, d_density: f64, d_color: Color) {
        self.density[node] += d_density;
        self.color[node] += d_color;
    }
}

/// Contributions recorded in order, for replay into a [`GridGrad`].
#[derive(Debug, Clone, Default)]
pub struct SparseGrad(Vec<(usize, f64, Color)>);

impl SparseGrad {
    pub fn replay_into(&self, grad: &mut GridGrad) {
        for &(node, d, c) in &self.0 {
            grad.add(node, d, c);
        }
    }
}

impl GradSink for SparseGrad {
    fn add(&mut self, node: usize, d_density: f64, d_color: Color) {
        self.0.push((node, d_density, d_color));
    }
}

/// Accumulates into `grad` the exact derivative of
/// `upstream · (color, disparity, transmittance)` of [`render_ray`] with
/// respect to every node density and color.
///
/// `spec` and `stop_depth` must match the forward pass; the sample
/// positions are regenerated from them.
pub fn render_ray_backward(
    grid: &RadianceGrid,
    ray: &Ray,
    spec: &SampleSpec,
    stop_depth: Option<f64>,
    upstream: &RayUpstream,
    grad: &mut impl GradSink,
) {
    if upstream.is_zero() {
        return;
    }
    let (_, sampled) = sample_positions(grid, ray, spec, stop_depth);
    let n = sampled.len();
    if n == 0 {
        return;
    }
    // forward values: per-sample density, color, survival and transmittance
    let mut sigma = Vec::with_capacity(n);
    let mut color = Vec::with_capacity(n);
    let mut trans_before = Vec::with_capacity(n);
    let mut survive = Vec::with_capacity(n);
    let mut t_acc = 1.0;
    for s in &sampled {
        let (sg, c) = s.stencil.map_or((0.0, Color::zeros()), |st| interpolate(grid, &st));
        let sv = (-sg * s.delta).exp();
        sigma.push(sg);
        color.push(c);
        trans_before.push(t_acc);
        survive.push(sv);
        t_acc *= sv;
    }
    let t_final = t_acc;

    // L = Σ wᵢ eᵢ + g_T · T with eᵢ = g_c·cᵢ + g_d / max(tᵢ, ε).
    // ∂wₖ/∂σₖ = δ Tₖ₊₁ and ∂wᵢ/∂σₖ = −δ wᵢ for i > k, ∂T/∂σₖ = −δ T.
    let value = |i: usize| upstream.color.dot(&color[i]) + upstream.disparity / sampled[i].t.max(DISPARITY_EPS);
    let mut suffix = 0.0; // Σ_{i>k} wᵢ eᵢ
    for k in (0..n).rev() {
        let s = &sampled[k];
        let weight = trans_before[k] * (1.0 - survive[k]);
        let t_after = trans_before[k] * survive[k];
        let e = value(k);
        let d_sigma = s.delta * (t_after * e - suffix - t_final * upstream.transmittance);
        let d_color = upstream.color * weight;
        suffix += weight * e;
        if let Some(stencil) = &s.stencil {
            for &(node, w) in stencil {
                if w != 0.0 {
                    grad.add(node, w * d_sigma, d_color * w);
                }
            }
        }
    }
}
