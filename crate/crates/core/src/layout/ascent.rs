use serde::{Deserialize, Serialize};

use super::{Bounds, LayoutError, Scorer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AscentParams {
    /// Central-difference half step.
    pub step: f64,
    pub lr: f64,
    pub n_iters: usize,
}

impl Default for AscentParams {
    fn default() -> Self {
        Self {
            step: 1e-4,
            lr: 1e-3,
            n_iters: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentResult {
    pub config: Vec<f64>,
    /// Score at the start and after each iteration.
    pub trace: Vec<f64>,
}

/// Fixed-step gradient ascent with central finite differences, clamped to
/// `bounds` after each move. Probes are clamped too, so the gradient is
/// one-sided at the boundary.
pub fn finite_diff_ascent<S: Scorer + ?Sized>(
    scorer: &S,
    bounds: &Bounds,
    init: &[f64],
    params: &AscentParams,
) -> Result<AscentResult, LayoutError> {
    bounds.validate()?;
    if !(params.step > 0.0) {
        return Err(LayoutError::Param("finite-difference step must be positive".into()));
    }
    if init.len() != bounds.dim() {
        return Err(LayoutError::Dimension {
            expected: bounds.dim(),
            got: init.len(),
        });
    }
    let mut x = init.to_vec();
    bounds.clamp(&mut x);
    let mut trace = vec![scorer.score(&x)?];
    let mut grad = vec![0.0; x.len()];
    for _ in 0..params.n_iters {
        for d in 0..x.len() {
            let mut hi = x.clone();
            let mut lo = x.clone();
            hi[d] = (x[d] + params.step).min(bounds.upper[d]);
            lo[d] = (x[d] - params.step).max(bounds.lower[d]);
            let span = hi[d] - lo[d];
            grad[d] = if span > 0.0 {
                (scorer.score(&hi)? - scorer.score(&lo)?) / span
            } else {
                0.0
            };
        }
        for d in 0..x.len() {
            x[d] += params.lr * grad[d];
        }
        bounds.clamp(&mut x);
        trace.push(scorer.score(&x)?);
    }
    Ok(AscentResult { config: x, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::FnScorer;

    #[test]
    fn converges_on_concave_quadratic() {
        let s = FnScorer(|x: &[f64]| -(x[0] - 0.3).powi(2) - 2.0 * (x[1] - 0.6).powi(2));
        let p = AscentParams {
            lr: 0.2,
            n_iters: 200,
            ..Default::default()
        };
        let r = finite_diff_ascent(&s, &Bounds::unit(2), &[0.9, 0.1], &p).unwrap();
        assert!((r.config[0] - 0.3).abs() < 1e-3 && (r.config[1] - 0.6).abs() < 1e-3);
    }

    #[test]
    fn zero_learning_rate_keeps_config() {
        let s = FnScorer(|x: &[f64]| x[0]);
        let p = AscentParams {
            lr: 0.0,
            ..Default::default()
        };
        let r = finite_diff_ascent(&s, &Bounds::unit(1), &[0.25], &p).unwrap();
        assert_eq!(r.config, vec![0.25]);
    }

    #[test]
    fn rejects_nonpositive_step() {
        let s = FnScorer(|x: &[f64]| x[0]);
        let p = AscentParams {
            step: 0.0,
            ..Default::default()
        };
        assert!(finite_diff_ascent(&s, &Bounds::unit(1), &[0.25], &p).is_err());
    }
}
