use std::f64::consts::PI;

use rand::Rng;

use crate::imaging::ImageBuf;
use crate::rng::substream;

/// Deterministic procedural RGB images: smooth color gradients overlaid
/// with a few soft discs and a sinusoidal stripe pattern. Used as a
/// reference set for degradation studies.
pub fn synthetic_corpus(count: usize, size: usize, seed: u64) -> Vec<ImageBuf> {
    (0..count)
        .map(|i| {
            let mut rng = substream(&[0xC0A9, seed, i as u64]);
            let base: [[f64; 3]; 2] = [
                [rng.random(), rng.random(), rng.random()],
                [rng.random(), rng.random(), rng.random()],
            ];
            let angle = rng.random::<f64>() * 2.0 * PI;
            let freq = rng.random_range(2.0..8.0);
            let stripe_amp = rng.random_range(0.05..0.2);
            let discs: Vec<(f64, f64, f64, [f64; 3])> = (0..rng.random_range(1..4))
                .map(|_| {
                    (
                        rng.random::<f64>(),
                        rng.random::<f64>(),
                        rng.random_range(0.08..0.3),
                        [rng.random(), rng.random(), rng.random()],
                    )
                })
                .collect();
            let mut img = ImageBuf::new(size, size, 3);
            for y in 0..size {
                for x in 0..size {
                    let (u, v) = ((x as f64 + 0.5) / size as f64, (y as f64 + 0.5) / size as f64);
                    let t = (u * angle.cos() + v * angle.sin()).clamp(0.0, 1.0);
                    let stripe = stripe_amp * (2.0 * PI * freq * (u * angle.sin() - v * angle.cos())).sin();
                    for c in 0..3 {
                        let mut val = base[0][c] * (1.0 - t) + base[1][c] * t + stripe;
                        for (dx, dy, r, col) in &discs {
                            let d = ((u - dx).powi(2) + (v - dy).powi(2)).sqrt();
                            let a = (1.0 - ((d - r) / 0.02).clamp(0.0, 1.0)).clamp(0.0, 1.0);
                            val = val * (1.0 - a) + col[c] * a;
                        }
                        img.set(x, y, c, val.clamp(0.0, 1.0));
                    }
                }
            }
            img
        })
        .collect()
}
