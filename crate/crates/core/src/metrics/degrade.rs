use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::imaging::ImageBuf;
use crate::rng::{substream, tag};

/// Degradation family. The strength is given separately as an `amount`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DegradationKind {
    /// Additive i.i.d. Gaussian noise, `amount` = σ; clamped to `[0, 1]`.
    GaussianNoise,
    /// Separable Gaussian blur, `amount` = σ in pixels.
    GaussianBlur,
    /// Rotation by `amount · exp(−r / (radius/3))` radians about the image
    /// center for `r ≤ radius`, with `radius = radius_fraction · min(W, H)`.
    Swirl { radius_fraction: f64 },
    /// `round(amount)` black squares with side `size_fraction · min(W, H)`.
    BlackRectangles { size_fraction: f64 },
}

impl DegradationKind {
    pub fn name(&self) -> &'static str {
        match self {
            DegradationKind::GaussianNoise => "gaussian_noise",
            DegradationKind::GaussianBlur => "gaussian_blur",
            DegradationKind::Swirl { .. } => "swirl",
            DegradationKind::BlackRectangles { .. } => "black_rectangles",
        }
    }

    /// Parses `noise`, `blur`, `swirl` or `rectangles` (or the snake-case
    /// names) with default shape parameters.
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "noise" | "gaussian_noise" => DegradationKind::GaussianNoise,
            "blur" | "gaussian_blur" => DegradationKind::GaussianBlur,
            "swirl" => DegradationKind::Swirl { radius_fraction: 0.5 },
            "rectangles" | "black_rectangles" => DegradationKind::BlackRectangles { size_fraction: 0.125 },
            _ => return None,
        })
    }

    fn id(&self) -> u64 {
        match self {
            DegradationKind::GaussianNoise => 1,
            DegradationKind::GaussianBlur => 2,
            DegradationKind::Swirl { .. } => 3,
            DegradationKind::BlackRectangles { .. } => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Degradation {
    pub kind: DegradationKind,
    pub amount: f64,
    pub seed: u64,
}

/// Applies `d`. An amount of zero returns the input unchanged.
pub fn degrade(image: &ImageBuf, d: &Degradation) -> ImageBuf {
    if d.amount == 0.0 {
        return image.clone();
    }
    let mut rng = substream(&[tag::DEGRADE, d.kind.id(), d.seed, d.amount.to_bits()]);
    match d.kind {
        DegradationKind::GaussianNoise => {
            let data = image
                .data
                .iter()
                .map(|v| (v + d.amount * rng.sample::<f64, _>(StandardNormal)).clamp(0.0, 1.0))
                .collect();
            ImageBuf::from_vec(image.width, image.height, image.channels, data)
        }
        DegradationKind::GaussianBlur => blur(image, d.amount),
        DegradationKind::Swirl { radius_fraction } => {
            swirl(image, d.amount, radius_fraction * image.width.min(image.height) as f64)
        }
        DegradationKind::BlackRectangles { size_fraction } => {
            let mut out = image.clone();
            let side = ((size_fraction * image.width.min(image.height) as f64).round() as usize).clamp(1, image.width.min(image.height));
            for _ in 0..d.amount.round().max(0.0) as usize {
                let x0 = rng.random_range(0..=image.width - side);
                let y0 = rng.random_range(0..=image.height - side);
                for y in y0..y0 + side {
                    for x in x0..x0 + side {
                        for c in 0..image.channels {
                            out.set(x, y, c, 0.0);
                        }
                    }
                }
            }
            out
        }
    }
}

fn blur(image: &ImageBuf, sigma: f64) -> ImageBuf {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);
    let pass = |src: &ImageBuf, horizontal: bool| {
        let mut out = ImageBuf::new(src.width, src.height, src.channels);
        let (w, h) = (src.width as isize, src.height as isize);
        for y in 0..h {
            for x in 0..w {
                for c in 0..src.channels {
                    let mut acc = 0.0;
                    for (k, wgt) in kernel.iter().enumerate() {
                        let o = k as isize - radius;
                        let (sx, sy) = if horizontal {
                            ((x + o).clamp(0, w - 1), y)
                        } else {
                            (x, (y + o).clamp(0, h - 1))
                        };
                        acc += wgt * src.get(sx as usize, sy as usize, c);
                    }
                    out.set(x as usize, y as usize, c, acc);
                }
            }
        }
        out
    };
    pass(&pass(image, true), false)
}

fn bilinear(image: &ImageBuf, x: f64, y: f64, c: usize) -> f64 {
    // pixel centers sit at integer + 0.5
    let fx = (x - 0.5).clamp(0.0, (image.width - 1) as f64);
    let fy = (y - 0.5).clamp(0.0, (image.height - 1) as f64);
    let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(image.width - 1), (y0 + 1).min(image.height - 1));
    let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
    let top = image.get(x0, y0, c) * (1.0 - tx) + image.get(x1, y0, c) * tx;
    let bottom = image.get(x0, y1, c) * (1.0 - tx) + image.get(x1, y1, c) * tx;
    top * (1.0 - ty) + bottom * ty
}

fn swirl(image: &ImageBuf, strength: f64, radius: f64) -> ImageBuf {
    let mut out = image.clone();
    let (cx, cy) = (image.width as f64 / 2.0, image.height as f64 / 2.0);
    for y in 0..image.height {
        for x in 0..image.width {
            let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
            let r = dx.hypot(dy);
            if r > radius {
                continue;
            }
            let angle = (strength * (-r / (radius / 3.0)).exp()).rem_euclid(TAU);
            let (s, c) = angle.sin_cos();
            // inverse map: sample where the swirl came from
            let sx = cx + c * dx + s * dy;
            let sy = cy - s * dx + c * dy;
            for ch in 0..image.channels {
                out.set(x, y, ch, bilinear(image, sx, sy, ch));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured() -> ImageBuf {
        let mut img = ImageBuf::new(40, 30, 3);
        for (i, v) in img.data.iter_mut().enumerate() {
            *v = ((i * 7919) % 101) as f64 / 100.0;
        }
        img
    }

    fn all_kinds() -> [DegradationKind; 4] {
        ["noise", "blur", "swirl", "rectangles"].map(|k| DegradationKind::parse(k).unwrap())
    }

    #[test]
    fn zero_amount_is_identity() {
        let img = textured();
        for kind in all_kinds() {
            assert_eq!(degrade(&img, &Degradation { kind, amount: 0.0, seed: 3 }), img);
        }
    }

    #[test]
    fn blur_preserves_constants() {
        let img = ImageBuf::filled(20, 20, 3, 0.42);
        let out = degrade(&img, &Degradation { kind: DegradationKind::GaussianBlur, amount: 2.0, seed: 0 });
        assert!(out.data.iter().all(|v| (v - 0.42).abs() < 1e-12));
    }

    #[test]
    fn deterministic() {
        let img = textured();
        for kind in all_kinds() {
            let d = Degradation { kind, amount: 2.0, seed: 11 };
            assert_eq!(degrade(&img, &d), degrade(&img, &d));
        }
    }

    #[test]
    fn swirl_leaves_outside_untouched() {
        let img = textured();
        let out = degrade(&img, &Degradation { kind: DegradationKind::Swirl { radius_fraction: 0.3 }, amount: 3.0, seed: 0 });
        let radius = 0.3 * 30.0;
        for y in 0..30 {
            for x in 0..40 {
                let r = (x as f64 + 0.5 - 20.0).hypot(y as f64 + 0.5 - 15.0);
                if r > radius {
                    assert!((0..3).all(|c| (out.get(x, y, c) - img.get(x, y, c)).abs() <= 1e-6));
                }
            }
        }
        assert_ne!(out, img);
    }

    #[test]
    fn rectangles_are_black() {
        let img = ImageBuf::filled(32, 32, 3, 1.0);
        let out = degrade(&img, &Degradation { kind: DegradationKind::BlackRectangles { size_fraction: 0.25 }, amount: 1.0, seed: 5 });
        assert_eq!(out.data.iter().filter(|v| **v == 0.0).count(), 8 * 8 * 3);
    }
}
