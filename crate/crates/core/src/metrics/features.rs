use crate::imaging::ImageBuf;

use super::MetricsError;

/// Cells per axis of the patch grid.
pub const PATCH_GRID: usize = 4;
/// Smallest accepted image side.
const MIN_SIDE: usize = 32;

/// Maps an image to a fixed-length feature vector.
pub trait FeatureExtractor: Sync {
    fn extract(&self, image: &ImageBuf) -> Result<Vec<f64>, MetricsError>;
}

/// Hand-crafted patch statistics, see [`patch_features`].
#[derive(Debug, Clone, Copy, Default)]
pub struct PatchFeatures;

impl FeatureExtractor for PatchFeatures {
    fn extract(&self, image: &ImageBuf) -> Result<Vec<f64>, MetricsError> {
        patch_features(image)
    }
}

/// Splits the image into a 4×4 grid and emits, per cell (row-major) and per
/// channel, the mean, standard deviation, mean absolute horizontal gradient
/// and mean absolute vertical gradient. Gradients only use pixel pairs
/// inside the cell. An RGB image gives 16 × 3 × 4 = 192 values.
pub fn patch_features(image: &ImageBuf) -> Result<Vec<f64>, MetricsError> {
    if image.width < MIN_SIDE || image.height < MIN_SIDE {
        return Err(MetricsError::Input(format!(
            "patch features need at least {MIN_SIDE}×{MIN_SIDE} pixels, got {}×{}",
            image.width, image.height
        )));
    }
    let ch = image.channels;
    let mut out = Vec::with_capacity(PATCH_GRID * PATCH_GRID * ch * 4);
    for cy in 0..PATCH_GRID {
        let (y0, y1) = (cy * image.height / PATCH_GRID, (cy + 1) * image.height / PATCH_GRID);
        for cx in 0..PATCH_GRID {
            let (x0, x1) = (cx * image.width / PATCH_GRID, (cx + 1) * image.width / PATCH_GRID);
            for c in 0..ch {
                let n = ((y1 - y0) * (x1 - x0)) as f64;
                let (mut sum, mut sq, mut gh, mut gv) = (0.0, 0.0, 0.0, 0.0);
                for y in y0..y1 {
                    for x in x0..x1 {
                        let v = image.get(x, y, c);
                        sum += v;
                        sq += v * v;
                        if x + 1 < x1 {
                            gh += (image.get(x + 1, y, c) - v).abs();
                        }
                        if y + 1 < y1 {
                            gv += (image.get(x, y + 1, c) - v).abs();
                        }
                    }
                }
                let mean = sum / n;
                let var = (sq / n - mean * mean).max(0.0);
                out.push(mean);
                out.push(var.sqrt());
                out.push(gh / ((y1 - y0) * (x1 - x0 - 1)) as f64);
                out.push(gv / ((y1 - y0 - 1) * (x1 - x0)) as f64);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_has_no_texture() {
        let f = patch_features(&ImageBuf::filled(40, 36, 3, 0.3)).unwrap();
        assert_eq!(f.len(), 192);
        for chunk in f.chunks(4) {
            assert!((chunk[0] - 0.3).abs() < 1e-12);
            assert!(chunk[1].abs() < 1e-6 && chunk[2] == 0.0 && chunk[3] == 0.0);
        }
    }

    #[test]
    fn rejects_small_images() {
        assert!(patch_features(&ImageBuf::new(31, 64, 3)).is_err());
    }
}
