use serde::{Deserialize, Serialize};

use crate::{Color, Vec3};

use super::FieldError;

/// Dense grid of density and color samples at the nodes of a regular
/// lattice; values between nodes are trilinearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct RadianceGrid {
    resolution: [usize; 3],
    min: Vec3,
    max: Vec3,
    pub(crate) density: Vec<f64>,
    pub(crate) color: Vec<Color>,
}

/// The 8 nodes enclosing a point and their trilinear weights.
pub type Stencil = [(usize, f64); 8];

/// Node coordinates within `1e-9` of an integer snap onto it, so queries at
/// node positions reproduce the stored value exactly.
const SNAP: f64 = 1e-9;

impl RadianceGrid {
    /// Grid with `resolution` nodes per axis, zero density and black color.
    pub fn new(min: Vec3, max: Vec3, resolution: [usize; 3]) -> Result<Self, FieldError> {
        if resolution.iter().any(|&r| r < 2) {
            return Err(FieldError::Resolution(resolution));
        }
        if !(max - min).iter().all(|e| e.is_finite() && *e > 0.0) {
            return Err(FieldError::DegenerateBounds);
        }
        let n = resolution.iter().product();
        Ok(Self {
            resolution,
            min,
            max,
            density: vec![0.0; n],
            color: vec![Color::zeros(); n],
        })
    }

    pub fn from_parts(
        min: Vec3,
        max: Vec3,
        resolution: [usize; 3],
        density: Vec<f64>,
        color: Vec<Color>,
    ) -> Result<Self, FieldError> {
        let mut grid = Self::new(min, max, resolution)?;
        if density.len() != grid.node_count() || color.len() != grid.node_count() {
            return Err(FieldError::Shape);
        }
        if density.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(FieldError::InvalidValue("density must be finite and non-negative"));
        }
        if color.iter().flat_map(|c| c.iter()).any(|c| !(0.0..=1.0).contains(c)) {
            return Err(FieldError::InvalidValue("color components must lie in [0, 1]"));
        }
        grid.density = density;
        grid.color = color;
        Ok(grid)
    }

    pub fn resolution(&self) -> [usize; 3] {
        self.resolution
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        (self.min, self.max)
    }

    pub fn node_count(&self) -> usize {
        self.density.len()
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn colors(&self) -> &[Color] {
        &self.color
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.resolution[0] * (j + self.resolution[1] * k)
    }

    pub fn node_position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let r = self.resolution;
        let lerp = |lo: f64, hi: f64, a: usize, n: usize| lo + (hi - lo) * (a as f64 / (n - 1) as f64);
        Vec3::new(
            lerp(self.min.x, self.max.x, i, r[0]),
            lerp(self.min.y, self.max.y, j, r[1]),
            lerp(self.min.z, self.max.z, k, r[2]),
        )
    }

    /// Sets a node's density, clamped at zero.
    pub fn set_density(&mut self, index: usize, sigma: f64) {
        self.density[index] = sigma.max(0.0);
    }

    /// Sets a node's color, clamped to `[0, 1]`.
    pub fn set_color(&mut self, index: usize, color: Color) {
        self.color[index] = color.map(|c| c.clamp(0.0, 1.0));
    }

    pub fn fill(&mut self, sigma: f64, color: Color) {
        for n in 0..self.node_count() {
            self.set_density(n, sigma);
            self.set_color(n, color);
        }
    }

    /// Trilinear stencil, or `None` outside the grid bounds.
    pub fn stencil(&self, p: &Vec3) -> Option<Stencil> {
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let n = self.resolution[a];
            let u = (p[a] - self.min[a]) / (self.max[a] - self.min[a]) * (n - 1) as f64;
            if !(u >= -SNAP && u <= (n - 1) as f64 + SNAP) {
                return None;
            }
            let r = u.round();
            let u = if (u - r).abs() <= SNAP { r } else { u };
            let i = (u.floor() as usize).min(n - 2);
            base[a] = i;
            frac[a] = u - i as f64;
        }
        Some(std::array::from_fn(|b| {
            let (dx, dy, dz) = (b & 1, (b >> 1) & 1, (b >> 2) & 1);
            let w = |d: usize, f: f64| if d == 1 { f } else { 1.0 - f };
            (
                self.node_index(base[0] + dx, base[1] + dy, base[2] + dz),
                w(dx, frac[0]) * w(dy, frac[1]) * w(dz, frac[2]),
            )
        }))
    }

    /// Initializes density from `profile` and sets every color to
    /// `profile.color()`.
    pub fn apply_init(&mut self, profile: &DensityInit) {
        let center = (self.min + self.max) * 0.5;
        let radius = ((self.max - self.min) * 0.5).min();
        let [rx, ry, rz] = self.resolution;
        for k in 0..rz {
            for j in 0..ry {
                for i in 0..rx {
                    let p = self.node_position(i, j, k);
                    let n = self.node_index(i, j, k);
                    self.set_density(n, profile.density_at((p - center).norm() / radius));
                    self.set_color(n, Color::from(profile.color()));
                }
            }
        }
    }
}

/// Trilinear interpolation of density and color. Points outside the grid
/// return zero density and black.
pub fn sample_field(grid: &RadianceGrid, p: &Vec3) -> (f64, Color) {
    match grid.stencil(p) {
        Some(stencil) => interpolate(grid, &stencil),
        None => (0.0, Color::zeros()),
    }
}

pub(crate) fn interpolate(grid: &RadianceGrid, stencil: &Stencil) -> (f64, Color) {
    let mut sigma = 0.0;
    let mut color = Color::zeros();
    for &(n, w) in stencil {
        sigma += w * grid.density[n];
        color += grid.color[n] * w;
    }
    (sigma, color)
}

/// Initial density profiles for the environment field.
///
/// `Radial` grows from `center` at the middle of the grid to `edge` at
/// normalized radius 1 (half the smallest grid extent), following
/// `center + (edge - center) * r^exponent`, and keeps growing beyond it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityInit {
    Zero,
    Constant {
        density: f64,
        #[serde(default = "gray")]
        color: [f64; 3],
    },
    Radial {
        center: f64,
        edge: f64,
        #[serde(default = "default_exponent")]
        exponent: f64,
        #[serde(default = "gray")]
        color: [f64; 3],
    },
}

fn gray() -> [f64; 3] {
    [0.5; 3]
}

fn default_exponent() -> f64 {
    2.0
}

impl Default for DensityInit {
    fn default() -> Self {
        DensityInit::Radial {
            center: 0.0,
            edge: 2.0,
            exponent: default_exponent(),
            color: gray(),
        }
    }
}

impl DensityInit {
    pub fn density_at(&self, normalized_radius: f64) -> f64 {
        match self {
            DensityInit::Zero => 0.0,
            DensityInit::Constant { density, .. } => *density,
            DensityInit::Radial {
                center,
                edge,
                exponent,
                ..
            } => center + (edge - center) * normalized_radius.powf(*exponent),
        }
    }

    pub fn color(&self) -> [f64; 3] {
        match self {
            DensityInit::Zero => [0.0; 3],
            DensityInit::Constant { color, .. } | DensityInit::Radial { color, .. } => *color,
        }
    }
}
