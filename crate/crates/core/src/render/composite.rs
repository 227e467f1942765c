use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::{accumulate_backward, render_ray, BackwardJob, GridGrad, RadianceGrid, Ray, RayUpstream, SampleSpec};
use crate::geometry::TriMesh;
use crate::imaging::ImageBuf;
use crate::rng::mix_seed;
use crate::Color;

use super::camera::{perspective_rays, equirect_rays, EquirectCamera, PerspectiveCamera};
use super::raster::{Fragment, GBuffer};

/// How mesh fragments and the volume are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositeMode {
    /// Occupied pixels show the mesh only; the rest the volume only.
    #[default]
    Hard,
    /// The volume is marched up to the mesh, which is then blended in with
    /// the residual transmittance, so fog in front of objects stays visible.
    Transmittance,
}

/// Ray-marching parameters shared by every view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeSettings {
    pub n_samples: usize,
    pub near: f64,
    pub far: f64,
}

impl Default for VolumeSettings {
    fn default() -> Self {
        Self {
            n_samples: 64,
            near: 0.01,
            far: 8.0,
        }
    }
}

/// RGB image and disparity image of one view.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderProducts {
    /// 3 channels in `[0, 1]`.
    pub rgb: ImageBuf,
    /// 1 channel, non-negative.
    pub disparity: ImageBuf,
}

impl RenderProducts {
    pub fn width(&self) -> usize {
        self.rgb.width
    }

    pub fn height(&self) -> usize {
        self.rgb.height
    }
}

/// Everything needed to replay one pixel's forward computation.
#[derive(Debug, Clone, Copy)]
struct PixelPlan {
    ray: Ray,
    spec: SampleSpec,
    /// Ray distance where the march stops, if a mesh is hit.
    stop: Option<f64>,
    /// Whether the volume contributes to this pixel at all.
    volume: bool,
    /// Coefficient of the mesh color in the output (1 hard, T blended).
    mesh_coeff: f64,
    mesh_color: Color,
    mesh_inv_depth: f64,
    fragment: Option<Fragment>,
}

/// A rendered view that remembers how it was produced, so gradients with
/// respect to its outputs can be pushed back into scene parameters.
#[derive(Debug, Clone)]
pub struct ViewRender {
    pub products: RenderProducts,
    pixels: Vec<PixelPlan>,
}

/// Gradients of a view with respect to scene parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewGradient {
    pub grid: GridGrad,
    /// Per mesh, per vertex color gradient.
    pub mesh_colors: Vec<Vec<Color>>,
}

fn pixel_spec(settings: &VolumeSettings, jitter: Option<u64>, pixel: usize) -> SampleSpec {
    match jitter {
        Some(seed) => SampleSpec::jittered(settings.n_samples, mix_seed(&[seed, pixel as u64])),
        None => SampleSpec::midpoint(settings.n_samples),
    }
}

/// Renders a perspective view of the rasterized meshes in `gbuf` inside the
/// volume. `jitter` selects stratified jitter seeded per pixel; `None`
/// samples stratum midpoints.
pub fn render_perspective(
    gbuf: &GBuffer,
    grid: &RadianceGrid,
    cam: &PerspectiveCamera,
    mode: CompositeMode,
    settings: &VolumeSettings,
    jitter: Option<u64>,
) -> ViewRender {
    assert_eq!((gbuf.width, gbuf.height), (cam.width, cam.height), "G-buffer from another camera");
    let forward = cam.basis().forward;
    let rays = perspective_rays(cam, settings.near, settings.far);
    let results: Vec<(PixelPlan, Color, f64)> = rays
        .par_iter()
        .enumerate()
        .map(|(p, ray)| {
            let spec = pixel_spec(settings, jitter, p);
            let mut plan = PixelPlan {
                ray: *ray,
                spec,
                stop: None,
                volume: true,
                mesh_coeff: 0.0,
                mesh_color: Color::zeros(),
                mesh_inv_depth: 0.0,
                fragment: None,
            };
            if !gbuf.occupancy[p] {
                let r = render_ray(grid, ray, &spec, None);
                return (plan, r.color, r.disparity);
            }
            let z = gbuf.depth[p];
            plan.mesh_color = gbuf.color[p];
            plan.mesh_inv_depth = 1.0 / z;
            plan.fragment = gbuf.fragment[p];
            match mode {
                CompositeMode::Hard => {
                    plan.volume = false;
                    plan.mesh_coeff = 1.0;
                    (plan, plan.mesh_color, plan.mesh_inv_depth)
                }
                CompositeMode::Transmittance => {
                    let stop = z / ray.direction.dot(&forward);
                    plan.stop = Some(stop);
                    let r = render_ray(grid, ray, &spec, Some(stop));
                    plan.mesh_coeff = r.transmittance;
                    let color = r.color + plan.mesh_color * r.transmittance;
                    let disparity = r.disparity + plan.mesh_inv_depth * r.transmittance;
                    (plan, color, disparity)
                }
            }
        })
        .collect();
    assemble(cam.width, cam.height, results)
}

/// Composites rasterized meshes with the volume (stratum-midpoint sampling).
pub fn composite(
    gbuf: &GBuffer,
    grid: &RadianceGrid,
    cam: &PerspectiveCamera,
    mode: CompositeMode,
    settings: &VolumeSettings,
) -> RenderProducts {
    render_perspective(gbuf, grid, cam, mode, settings, None).products
}

/// Volume-only panorama. Meshes are never drawn into panoramic views.
pub fn render_panorama(grid: &RadianceGrid, cam: &EquirectCamera, settings: &VolumeSettings, jitter: Option<u64>) -> ViewRender {
    let rays = equirect_rays(cam, settings.near, settings.far);
    let results: Vec<(PixelPlan, Color, f64)> = rays
        .par_iter()
        .enumerate()
        .map(|(p, ray)| {
            let spec = pixel_spec(settings, jitter, p);
            let r = render_ray(grid, ray, &spec, None);
            let plan = PixelPlan {
                ray: *ray,
                spec,
                stop: None,
                volume: true,
                mesh_coeff: 0.0,
                mesh_color: Color::zeros(),
                mesh_inv_depth: 0.0,
                fragment: None,
            };
            (plan, r.color, r.disparity)
        })
        .collect();
    assemble(cam.width, cam.height, results)
}

fn assemble(width: usize, height: usize, results: Vec<(PixelPlan, Color, f64)>) -> ViewRender {
    let mut rgb = ImageBuf::new(width, height, 3);
    let mut disparity = ImageBuf::new(width, height, 1);
    let mut pixels = Vec::with_capacity(results.len());
    for (p, (plan, color, disp)) in results.into_iter().enumerate() {
        rgb.data[3 * p..3 * p + 3].copy_from_slice(color.as_slice());
        disparity.data[p] = disp;
        pixels.push(plan);
    }
    ViewRender {
        products: RenderProducts { rgb, disparity },
        pixels,
    }
}

impl ViewRender {
    /// Pushes per-pixel output gradients (`d_rgb`: 3 channels, `d_disparity`:
    /// 1 channel) back to grid parameters and mesh vertex colors. Mesh
    /// geometry receives no gradient.
    pub fn backward(&self, grid: &RadianceGrid, meshes: &[TriMesh], d_rgb: &ImageBuf, d_disparity: &ImageBuf) -> ViewGradient {
        assert_eq!(d_rgb.data.len(), 3 * self.pixels.len(), "rgb gradient shape");
        assert_eq!(d_disparity.data.len(), self.pixels.len(), "disparity gradient shape");
        let mut mesh_colors: Vec<Vec<Color>> = meshes.iter().map(|m| vec![Color::zeros(); m.positions.len()]).collect();
        let mut jobs = Vec::new();
        for (p, plan) in self.pixels.iter().enumerate() {
            let g_rgb = Color::new(d_rgb.data[3 * p], d_rgb.data[3 * p + 1], d_rgb.data[3 * p + 2]);
            let g_disp = d_disparity.data[p];
            if plan.volume {
                let upstream = RayUpstream {
                    color: g_rgb,
                    disparity: g_disp,
                    transmittance: if plan.stop.is_some() {
                        g_rgb.dot(&plan.mesh_color) + g_disp * plan.mesh_inv_depth
                    } else {
                        0.0
                    },
                };
                if !upstream.is_zero() {
                    jobs.push(BackwardJob {
                        ray: plan.ray,
                        spec: plan.spec,
                        stop_depth: plan.stop,
                        upstream,
                    });
                }
            }
            if let Some(frag) = plan.fragment {
                if plan.mesh_coeff != 0.0 {
                    let tri = meshes[frag.mesh as usize].triangles[frag.triangle as usize];
                    for (v, w) in tri.iter().zip(frag.weights) {
                        mesh_colors[frag.mesh as usize][*v as usize] += g_rgb * (w * plan.mesh_coeff);
                    }
                }
            }
        }
        ViewGradient {
            grid: accumulate_backward(grid, &jobs),
            mesh_colors,
        }
    }
}
