use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::Vec3;

use super::camera::{EquirectCamera, PerspectiveCamera};
use super::RenderError;

/// Random perspective viewpoints on a sphere around the scene center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerspectiveSampling {
    /// Sphere radius as a multiple of the scene radius.
    pub radius_factor: f64,
    pub elevation_min_deg: f64,
    pub elevation_max_deg: f64,
    pub fov_deg: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for PerspectiveSampling {
    fn default() -> Self {
        Self {
            radius_factor: 1.0,
            elevation_min_deg: -15.0,
            elevation_max_deg: 45.0,
            fov_deg: 60.0,
            width: 64,
            height: 64,
        }
    }
}

impl PerspectiveSampling {
    pub fn validate(&self) -> Result<(), RenderError> {
        let (lo, hi) = (self.elevation_min_deg, self.elevation_max_deg);
        if !(-90.0 < lo && lo <= hi && hi < 90.0) {
            return Err(RenderError::Camera(format!("elevation band [{lo}, {hi}] must lie strictly inside (-90, 90)")));
        }
        if !(self.radius_factor > 0.0) {
            return Err(RenderError::Camera("radius factor must be positive".into()));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) || self.width == 0 || self.height == 0 {
            return Err(RenderError::Camera("invalid field of view or image size".into()));
        }
        Ok(())
    }
}

/// Camera at `radius_factor × scene_radius` from `center`, uniformly
/// distributed over the part of the sphere inside the elevation band,
/// looking at `center` with +y up.
pub fn sample_perspective_camera<R: Rng + ?Sized>(
    rng: &mut R,
    center: &Vec3,
    scene_radius: f64,
    config: &PerspectiveSampling,
) -> Result<PerspectiveCamera, RenderError> {
    config.validate()?;
    if !(scene_radius > 0.0) {
        return Err(RenderError::Camera("scene radius must be positive".into()));
    }
    // uniform area measure on a spherical band: sin(elevation) is uniform
    let (s0, s1) = (config.elevation_min_deg.to_radians().sin(), config.elevation_max_deg.to_radians().sin());
    let sin_e = s0 + (s1 - s0) * rng.random::<f64>();
    let azimuth = 2.0 * PI * rng.random::<f64>();
    let cos_e = (1.0 - sin_e * sin_e).sqrt();
    let dir = Vec3::new(cos_e * azimuth.cos(), sin_e, cos_e * azimuth.sin());
    let position = center + dir * (config.radius_factor * scene_radius);
    PerspectiveCamera::new(
        position,
        *center,
        Vec3::y(),
        config.fov_deg.to_radians(),
        config.width,
        config.height,
    )
}

/// Largest panorama offset as a fraction of the scene radius.
pub const PANO_OFFSET_FRACTION: f64 = 0.1;

/// Panorama centered on the scene with a random offset: uniform direction,
/// magnitude uniform in `[0, 0.1 × scene_radius]`.
pub fn sample_pano_camera<R: Rng + ?Sized>(
    rng: &mut R,
    center: &Vec3,
    scene_radius: f64,
    width: usize,
    height: usize,
) -> Result<EquirectCamera, RenderError> {
    if !(scene_radius >= 0.0) {
        return Err(RenderError::Camera("scene radius must be non-negative".into()));
    }
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.random::<f64>();
    let r = (1.0 - z * z).sqrt();
    let dir = Vec3::new(r * phi.cos(), z, r * phi.sin());
    let magnitude = PANO_OFFSET_FRACTION * scene_radius * rng.random::<f64>();
    EquirectCamera::new(center + dir * magnitude, width, height)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn perspective_positions_on_sphere_and_in_band() {
        let cfg = PerspectiveSampling::default();
        let mut rng = substream(&[7]);
        for _ in 0..1000 {
            let cam = sample_perspective_camera(&mut rng, &Vec3::zeros(), 2.5, &cfg).unwrap();
            assert!((cam.position.norm() - 2.5).abs() < 1e-9);
            let elev = (cam.position.y / cam.position.norm()).asin().to_degrees();
            assert!((-15.0 - 1e-9..=45.0 + 1e-9).contains(&elev));
            assert_eq!(cam.target, Vec3::zeros());
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = PerspectiveSampling::default();
        let a = sample_perspective_camera(&mut substream(&[3]), &Vec3::zeros(), 1.0, &cfg).unwrap();
        let b = sample_perspective_camera(&mut substream(&[3]), &Vec3::zeros(), 1.0, &cfg).unwrap();
        assert_eq!(a, b);
        let p = sample_pano_camera(&mut substream(&[3]), &Vec3::zeros(), 1.0, 8, 4).unwrap();
        let q = sample_pano_camera(&mut substream(&[3]), &Vec3::zeros(), 1.0, 8, 4).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn pano_offset_bounded() {
        let mut rng = substream(&[11]);
        let center = Vec3::new(0.5, -1.0, 2.0);
        for _ in 0..1000 {
            let cam = sample_pano_camera(&mut rng, &center, 3.0, 8, 4).unwrap();
            assert!((cam.center - center).norm() <= 0.3 + 1e-12);
        }
        let cam = sample_pano_camera(&mut rng, &center, 0.0, 8, 4).unwrap();
        assert_eq!(cam.center, center);
    }

    #[test]
    fn band_validation() {
        let cfg = PerspectiveSampling {
            elevation_max_deg: 90.0,
            ..Default::default()
        };
        assert!(sample_perspective_camera(&mut substream(&[1]), &Vec3::zeros(), 1.0, &cfg).is_err());
    }
}
