//! Cameras, ray generation, mesh rasterization and mesh/volume compositing.

mod camera;
mod composite;
mod raster;
mod sampling;

use thiserror::Error;

pub use camera::{equirect_direction, equirect_rays, perspective_rays, CameraBasis, EquirectCamera, PerspectiveCamera};
pub use composite::{
    composite, render_panorama, render_perspective, CompositeMode, RenderProducts, ViewGradient, ViewRender,
    VolumeSettings,
};
pub use raster::{rasterize, Fragment, GBuffer, NEAR_Z};
pub use sampling::{sample_pano_camera, sample_perspective_camera, PerspectiveSampling, PANO_OFFSET_FRACTION};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("invalid camera: {0}")]
    Camera(String),
}
