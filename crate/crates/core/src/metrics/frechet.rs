use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::MetricsError;

/// Eigenvalues above `-EIGEN_CLIP` are treated as round-off and clipped to 0.
pub const EIGEN_CLIP: f64 = 1e-8;

/// Gaussian fit of a set of feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub features: Vec<Vec<f64>>,
    pub mean: DVector<f64>,
    /// Unbiased (N − 1) covariance.
    pub cov: DMatrix<f64>,
}

impl FeatureSet {
    pub fn new(features: Vec<Vec<f64>>) -> Result<Self, MetricsError> {
        let n = features.len();
        if n < 2 {
            return Err(MetricsError::Input(format!("need at least 2 feature vectors for a covariance, got {n}")));
        }
        let d = features[0].len();
        if d == 0 || features.iter().any(|f| f.len() != d) {
            return Err(MetricsError::Input("feature vectors must share a non-zero dimension".into()));
        }
        let x = DMatrix::from_fn(n, d, |i, j| features[i][j]);
        let mean = DVector::from_fn(d, |j, _| x.column(j).sum() / n as f64);
        let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
        let mut cov = centered.transpose() * &centered / (n as f64 - 1.0);
        cov = (&cov + cov.transpose()) * 0.5;
        Ok(Self { features, mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

fn check_psd(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>, MetricsError> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let min = eig.eigenvalues.min();
    if min < -EIGEN_CLIP {
        return Err(MetricsError::NotPsd(min));
    }
    Ok(eig)
}

/// `‖μ1 − μ2‖² + Tr(Σ1 + Σ2 − 2(Σ1Σ2)^{1/2})`.
///
/// `Tr((Σ1Σ2)^{1/2})` equals `Tr((A Σ2 A)^{1/2})` with `A = Σ1^{1/2}`;
/// the inner product is symmetric PSD, so both roots come from symmetric
/// eigendecompositions.
pub fn frechet_distance(mu1: &DVector<f64>, s1: &DMatrix<f64>, mu2: &DVector<f64>, s2: &DMatrix<f64>) -> Result<f64, MetricsError> {
    let d = mu1.len();
    if mu2.len() != d || s1.shape() != (d, d) || s2.shape() != (d, d) {
        return Err(MetricsError::Input("mean/covariance dimensions disagree".into()));
    }
    let e1 = check_psd(s1)?;
    check_psd(s2)?;
    let root1 = &e1.eigenvectors
        * DMatrix::from_diagonal(&e1.eigenvalues.map(|l| l.max(0.0).sqrt()))
        * e1.eigenvectors.transpose();
    let inner = &root1 * s2 * &root1;
    let inner = (&inner + inner.transpose()) * 0.5;
    let eig = SymmetricEigen::new(inner);
    let mut tr_sqrt = 0.0;
    for l in eig.eigenvalues.iter() {
        if *l < -EIGEN_CLIP * (1.0 + eig.eigenvalues.amax()) {
            return Err(MetricsError::NotPsd(*l));
        }
        tr_sqrt += l.max(0.0).sqrt();
    }
    let diff = mu1 - mu2;
    let value = diff.norm_squared() + s1.trace() + s2.trace() - 2.0 * tr_sqrt;
    Ok(value.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(d: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(d))
    }

    #[test]
    fn one_dimensional_unit_shift() {
        let v = frechet_distance(&DVector::from_element(1, 0.0), &m(&[1.0]), &DVector::from_element(1, 1.0), &m(&[1.0])).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_closed_form() {
        let (a, b): ([f64; 4], [f64; 4]) = ([0.5, 2.0, 0.0, 3.0], [1.5, 0.3, 4.0, 3.0]);
        let (mu1, mu2) = (DVector::from_column_slice(&[0.1f64, 0.2, 0.3, 0.4]), DVector::from_column_slice(&[0.0, -1.0, 0.3, 2.0]));
        let expected: f64 = (0..4).map(|i| (mu1[i] - mu2[i]).powi(2) + (a[i].sqrt() - b[i].sqrt()).powi(2)).sum();
        let v = frechet_distance(&mu1, &m(&a), &mu2, &m(&b)).unwrap();
        assert!((v - expected).abs() < 1e-9, "{v} vs {expected}");
    }

    #[test]
    fn rejects_indefinite() {
        let z = DVector::zeros(2);
        assert!(matches!(frechet_distance(&z, &m(&[1.0, -0.1]), &z, &m(&[1.0, 1.0])), Err(MetricsError::NotPsd(_))));
    }

    #[test]
    fn covariance_is_unbiased() {
        let f = FeatureSet::new(vec![vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(f.mean[0], 1.0);
        assert_eq!(f.cov[(0, 0)], 2.0);
    }
}
