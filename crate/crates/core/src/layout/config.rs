use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::ObjectPose;
use crate::Vec3;

use super::LayoutError;

/// Entries per object: tx, ty, tz, yaw, log_scale.
pub const DIMS_PER_OBJECT: usize = 5;

/// Flat per-object pose parameters, the position of one particle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfigVector(pub Vec<f64>);

impl ConfigVector {
    pub fn from_poses(poses: &[ObjectPose]) -> Self {
        let mut v = Vec::with_capacity(DIMS_PER_OBJECT * poses.len());
        for p in poses {
            v.extend_from_slice(&p.translation);
            v.push(p.yaw);
            v.push(p.log_scale);
        }
        Self(v)
    }

    pub fn object_count(&self) -> usize {
        self.0.len() / DIMS_PER_OBJECT
    }

    /// Poses encoded in the vector; yaw is wrapped into `[0, 2π)`.
    pub fn to_poses(&self) -> Vec<ObjectPose> {
        assert_eq!(self.0.len() % DIMS_PER_OBJECT, 0, "config length must be a multiple of {DIMS_PER_OBJECT}");
        self.0
            .chunks_exact(DIMS_PER_OBJECT)
            .map(|c| ObjectPose::new(Vec3::new(c[0], c[1], c[2]), c[3], c[4]))
            .collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Per-dimension closed box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, LayoutError> {
        let b = Self { lower, upper };
        b.validate()?;
        Ok(b)
    }

    /// The unit hypercube `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn validate(&self) -> Result<(), LayoutError> {
        if self.lower.len() != self.upper.len() {
            return Err(LayoutError::Dimension {
                expected: self.lower.len(),
                got: self.upper.len(),
            });
        }
        if self.lower.is_empty() {
            return Err(LayoutError::EmptyBounds);
        }
        for (dim, (&lower, &upper)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lower.is_finite() && upper.is_finite() && lower <= upper) {
                return Err(LayoutError::InvalidBounds { dim, lower, upper });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn range(&self, d: usize) -> f64 {
        self.upper[d] - self.lower[d]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(d, v)| (self.lower[d]..=self.upper[d]).contains(v))
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (d, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[d], self.upper[d]);
        }
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|d| self.range(d)).product()
    }

    pub fn concat(parts: &[Bounds]) -> Bounds {
        Bounds {
            lower: parts.iter().flat_map(|b| b.lower.iter().copied()).collect(),
            upper: parts.iter().flat_map(|b| b.upper.iter().copied()).collect(),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScoreError {
    /// The remote scorer could not be reached or answered with an error.
    #[error("scoring service: {0}")]
    Service(String),
    #[error("scorer returned a non-finite value")]
    NonFinite,
    #[error("scorer expects {expected} dimensions, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("scorer failed: {0}")]
    Other(String),
}

/// A reward over configurations; higher is better. Implementations must be
/// deterministic for a fixed configuration.
pub trait Scorer: Sync {
    fn score(&self, config: &[f64]) -> Result<f64, ScoreError>;
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn score(&self, config: &[f64]) -> Result<f64, ScoreError> {
        (**self).score(config)
    }
}

/// Adapts an infallible closure.
pub struct FnScorer<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Sync> Scorer for FnScorer<F> {
    fn score(&self, config: &[f64]) -> Result<f64, ScoreError> {
        Ok((self.0)(config))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pose_roundtrip() {
        let poses = vec![
            ObjectPose::new(Vec3::new(1.0, 2.0, 3.0), 0.5, -0.2),
            ObjectPose::new(Vec3::new(-1.0, 0.0, 0.5), 7.0, 0.1),
        ];
        let c = ConfigVector::from_poses(&poses);
        assert_eq!(c.0.len(), 10);
        assert_eq!(c.to_poses(), poses);
    }

    #[test]
    fn bounds_validation() {
        assert!(matches!(Bounds::new(vec![], vec![]), Err(LayoutError::EmptyBounds)));
        assert!(Bounds::new(vec![1.0], vec![0.0]).is_err());
        assert!(Bounds::new(vec![0.0], vec![f64::NAN]).is_err());
        let b = Bounds::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        let mut x = [2.0, -3.0];
        b.clamp(&mut x);
        assert_eq!(x, [1.0, -1.0]);
        assert_eq!(b.volume(), 2.0);
    }
}
