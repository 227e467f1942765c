use log::debug;

use super::GuidanceError;

/// Affine alignment `s·I_d + b ≈ Î_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleBias {
    pub s: f64,
    pub b: f64,
}

impl ScaleBias {
    pub fn apply(&self, v: f64) -> f64 {
        self.s * v + self.b
    }
}

fn check_pair(rendered: &[f64], predicted: &[f64]) -> Result<(), GuidanceError> {
    if rendered.len() != predicted.len() {
        return Err(GuidanceError::Shape(format!(
            "disparity maps differ in length ({} vs {})",
            rendered.len(),
            predicted.len()
        )));
    }
    if rendered.len() < 2 {
        return Err(GuidanceError::Degenerate("need at least two disparity samples".into()));
    }
    if !rendered.iter().chain(predicted).all(|v| v.is_finite()) {
        return Err(GuidanceError::Degenerate("non-finite disparity value".into()));
    }
    Ok(())
}

/// Least-squares minimizer of `‖s·I_d + b − Î_d‖²` (unconstrained).
///
/// Uses the centered form of the normal equations,
/// `s = Σ(I−Ī)(Î−Î̄) / Σ(I−Ī)²`, `b = Î̄ − s·Ī`, which is algebraically the
/// textbook solution but loses far less precision.
pub fn solve_scale_bias(rendered: &[f64], predicted: &[f64]) -> Result<ScaleBias, GuidanceError> {
    check_pair(rendered, predicted)?;
    let n = rendered.len() as f64;
    let mi = rendered.iter().sum::<f64>() / n;
    let mp = predicted.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (i, p) in rendered.iter().zip(predicted) {
        sxx += (i - mi) * (i - mi);
        sxy += (i - mi) * (p - mp);
    }
    let scale = rendered.iter().map(|v| v * v).sum::<f64>() / n;
    if sxx <= 1e-24 * n * scale.max(f64::MIN_POSITIVE) || sxx == 0.0 {
        return Err(GuidanceError::Degenerate("rendered disparity is constant".into()));
    }
    let s = sxy / sxx;
    if s <= 0.0 {
        debug!("disparity alignment produced a non-positive scale ({s})");
    }
    Ok(ScaleBias { s, b: mp - s * mi })
}

/// [`solve_scale_bias`] with `s` optionally clamped to be non-negative (the
/// bias is then re-fitted for the clamped scale).
pub fn solve_scale_bias_with(rendered: &[f64], predicted: &[f64], clamp_positive: bool) -> Result<ScaleBias, GuidanceError> {
    let fit = solve_scale_bias(rendered, predicted)?;
    if clamp_positive && fit.s < 0.0 {
        let n = rendered.len() as f64;
        let mp = predicted.iter().sum::<f64>() / n;
        return Ok(ScaleBias { s: 0.0, b: mp });
    }
    Ok(fit)
}

/// Mean squared residual after optimal alignment, and its gradient with
/// respect to the rendered disparity. At the optimum the derivatives of the
/// loss with respect to `s` and `b` vanish, so only the direct term
/// `2·s·r_k / N` survives.
pub fn depth_loss(rendered: &[f64], predicted: &[f64]) -> Result<(f64, Vec<f64>), GuidanceError> {
    let fit = solve_scale_bias(rendered, predicted)?;
    let n = rendered.len() as f64;
    let residuals: Vec<f64> = rendered.iter().zip(predicted).map(|(i, p)| fit.apply(*i) - p).collect();
    let loss = residuals.iter().map(|r| r * r).sum::<f64>() / n;
    let grad = residuals.iter().map(|r| 2.0 * fit.s * r / n).collect();
    Ok((loss, grad))
}
