use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::guidance::depth_loss;
use crate::imaging::ImageBuf;
use crate::rng::mix_seed;

use super::degrade::{degrade, Degradation, DegradationKind};
use super::features::FeatureExtractor;
use super::frechet::{frechet_distance, FeatureSet};
use super::MetricsError;

/// Mean squared error after aligning `rendered` to `predicted` by the
/// least-squares scale and bias.
pub fn depth_align_metric(rendered: &[f64], predicted: &[f64]) -> Result<f64, MetricsError> {
    Ok(depth_loss(rendered, predicted)?.0)
}

/// Fréchet distances from a reference set to its degraded copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidReport {
    pub kind: String,
    /// Ascending.
    pub levels: Vec<f64>,
    pub distances: Vec<f64>,
    /// Distances strictly increase with the level.
    pub monotone: bool,
}

/// The evaluation report written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub clip_ap: Option<f64>,
    pub depth_align_mse: Option<f64>,
    pub fid: Option<FidReport>,
}

fn features_of<F: FeatureExtractor + ?Sized>(images: &[ImageBuf], extractor: &F) -> Result<FeatureSet, MetricsError> {
    let feats: Result<Vec<Vec<f64>>, MetricsError> = images.par_iter().map(|i| extractor.extract(i)).collect();
    FeatureSet::new(feats?)
}

/// Degrades every reference image at each level (image `i` uses seed
/// `mix(seed, i)`) and reports the Fréchet distance of each degraded set to
/// the undegraded one. Levels are sorted ascending and must include 0.
pub fn fid_monotonicity_report<F: FeatureExtractor + ?Sized>(
    reference: &[ImageBuf],
    kind: DegradationKind,
    levels: &[f64],
    seed: u64,
    extractor: &F,
) -> Result<FidReport, MetricsError> {
    if reference.len() < 2 {
        return Err(MetricsError::Input(format!(
            "need at least 2 reference images to estimate a covariance, got {}",
            reference.len()
        )));
    }
    let mut levels = levels.to_vec();
    if levels.len() < 2 || !levels.iter().all(|l| l.is_finite() && *l >= 0.0) {
        return Err(MetricsError::Input("need at least two finite, non-negative levels".into()));
    }
    levels.sort_by(f64::total_cmp);
    if levels[0] != 0.0 {
        return Err(MetricsError::Input("levels must include 0".into()));
    }
    let base = features_of(reference, extractor)?;
    let mut distances = Vec::with_capacity(levels.len());
    for &amount in &levels {
        let degraded: Vec<ImageBuf> = reference
            .iter()
            .enumerate()
            .map(|(i, img)| {
                degrade(
                    img,
                    &Degradation {
                        kind,
                        amount,
                        seed: mix_seed(&[seed, i as u64]),
                    },
                )
            })
            .collect();
        let set = features_of(&degraded, extractor)?;
        distances.push(frechet_distance(&base.mean, &base.cov, &set.mean, &set.cov)?);
    }
    let monotone = distances.windows(2).all(|w| w[1] > w[0]);
    Ok(FidReport {
        kind: kind.name().into(),
        levels,
        distances,
        monotone,
    })
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
