use std::f64::consts::PI;

use crate::field::Ray;
use crate::Vec3;

use super::RenderError;

/// Pinhole camera. Pixel `(u, v)` has its center at `(u + 0.5, v + 0.5)`,
/// `v` growing downward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerspectiveCamera {
    pub position: Vec3,
    pub target: Vec3,
    pub up: Vec3,
    /// Vertical field of view in radians.
    pub fov_y: f64,
    pub width: usize,
    pub height: usize,
}

/// Orthonormal camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraBasis {
    pub right: Vec3,
    pub up: Vec3,
    pub forward: Vec3,
}

impl PerspectiveCamera {
    pub fn new(position: Vec3, target: Vec3, up: Vec3, fov_y: f64, width: usize, height: usize) -> Result<Self, RenderError> {
        let cam = Self {
            position,
            target,
            up,
            fov_y,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if !(self.fov_y > 0.0 && self.fov_y < PI) {
            return Err(RenderError::Camera("field of view must lie in (0, π)".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(RenderError::Camera("image must be at least 1×1".into()));
        }
        let view = self.target - self.position;
        if view.norm() == 0.0 || !view.iter().all(|v| v.is_finite()) {
            return Err(RenderError::Camera("camera position coincides with its target".into()));
        }
        if view.normalize().cross(&self.up).norm() < 1e-9 {
            return Err(RenderError::Camera("up vector is parallel to the view direction".into()));
        }
        Ok(())
    }

    pub fn basis(&self) -> CameraBasis {
        let forward = (self.target - self.position).normalize();
        let right = forward.cross(&self.up).normalize();
        let up = right.cross(&forward);
        CameraBasis { right, up, forward }
    }

    pub fn aspect(&self) -> f64 {
        self.width as f64 / self.height as f64
    }

    fn tan_half(&self) -> f64 {
        (0.5 * self.fov_y).tan()
    }

    /// Unit direction through continuous pixel coordinates `(x, y)`.
    pub fn direction_at(&self, x: f64, y: f64) -> Vec3 {
        let b = self.basis();
        let th = self.tan_half();
        let sx = (2.0 * x / self.width as f64 - 1.0) * th * self.aspect();
        let sy = (1.0 - 2.0 * y / self.height as f64) * th;
        (b.forward + b.right * sx + b.up * sy).normalize()
    }

    /// Projects a world point to `(x, y, z)`: continuous pixel coordinates
    /// and camera-space depth along the optical axis.
    pub fn project(&self, p: &Vec3) -> (f64, f64, f64) {
        let b = self.basis();
        let d = p - self.position;
        let (xc, yc, zc) = (d.dot(&b.right), d.dot(&b.up), d.dot(&b.forward));
        let th = self.tan_half();
        let x = (xc / (zc * th * self.aspect()) + 1.0) * 0.5 * self.width as f64;
        let y = (1.0 - yc / (zc * th)) * 0.5 * self.height as f64;
        (x, y, zc)
    }
}

/// One ray per pixel, row-major from the top-left pixel.
pub fn perspective_rays(cam: &PerspectiveCamera, near: f64, far: f64) -> Vec<Ray> {
    let mut rays = Vec::with_capacity(cam.width * cam.height);
    for v in 0..cam.height {
        for u in 0..cam.width {
            let d = cam.direction_at(u as f64 + 0.5, v as f64 + 0.5);
            rays.push(Ray::new(cam.position, d, near, far));
        }
    }
    rays
}

/// Full-sphere panorama camera with `width = 2 · height`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquirectCamera {
    pub center: Vec3,
    pub width: usize,
    pub height: usize,
}

impl EquirectCamera {
    pub fn new(center: Vec3, width: usize, height: usize) -> Result<Self, RenderError> {
        if height == 0 || width != 2 * height {
            return Err(RenderError::Camera(format!(
                "equirectangular images need width = 2 × height, got {width}×{height}"
            )));
        }
        Ok(Self { center, width, height })
    }

    /// Polar angle from +y and azimuth of pixel `(u, v)`'s center.
    pub fn angles(&self, u: usize, v: usize) -> (f64, f64) {
        let theta = PI * (v as f64 + 0.5) / self.height as f64;
        let phi = 2.0 * PI * (u as f64 + 0.5) / self.width as f64;
        (theta, phi)
    }

    pub fn direction(&self, u: usize, v: usize) -> Vec3 {
        let (theta, phi) = self.angles(u, v);
        equirect_direction(theta, phi)
    }
}

/// `(sinθ cosφ, cosθ, sinθ sinφ)` with θ measured from the +y pole.
pub fn equirect_direction(theta: f64, phi: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(st * cp, ct, st * sp)
}

pub fn equirect_rays(cam: &EquirectCamera, near: f64, far: f64) -> Vec<Ray> {
    let mut rays = Vec::with_capacity(cam.width * cam.height);
    for v in 0..cam.height {
        for u in 0..cam.width {
            rays.push(Ray::new(cam.center, cam.direction(u, v), near, far));
        }
    }
    rays
}
