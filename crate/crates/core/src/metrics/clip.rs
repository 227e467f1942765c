use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Image-by-prompt similarities with each image's true prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    /// `scores[image][prompt]`.
    pub scores: Vec<Vec<f64>>,
    pub ground_truth: Vec<usize>,
    pub n_prompts: usize,
}

impl SimilarityMatrix {
    pub fn new(scores: Vec<Vec<f64>>, ground_truth: Vec<usize>, n_prompts: usize) -> Result<Self, MetricsError> {
        let m = Self {
            scores,
            ground_truth,
            n_prompts,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        let bad = |m: String| Err(MetricsError::Input(m));
        if self.n_prompts < 2 {
            return bad("average precision needs at least two prompts".into());
        }
        if self.scores.len() != self.ground_truth.len() {
            return bad("one ground-truth prompt per image required".into());
        }
        for (i, row) in self.scores.iter().enumerate() {
            if row.len() != self.n_prompts || !row.iter().all(|v| v.is_finite()) {
                return bad(format!("image {i}: expected {} finite similarities", self.n_prompts));
            }
        }
        for p in 0..self.n_prompts {
            if !self.ground_truth.contains(&p) {
                return bad(format!("prompt {p} has no images"));
            }
        }
        if let Some(g) = self.ground_truth.iter().find(|g| **g >= self.n_prompts) {
            return bad(format!("ground-truth prompt {g} out of range"));
        }
        Ok(())
    }
}

/// Mean over prompts of the average precision of ranking all images by
/// their similarity to that prompt, × 100. Images rendered for the prompt
/// are the positives. Ties are ranked by image index.
pub fn clip_ap(m: &SimilarityMatrix) -> Result<f64, MetricsError> {
    m.validate()?;
    let mut total = 0.0;
    for p in 0..m.n_prompts {
        let mut order: Vec<usize> = (0..m.scores.len()).collect();
        order.sort_by(|&a, &b| m.scores[b][p].total_cmp(&m.scores[a][p]).then(a.cmp(&b)));
        let (mut hits, mut ap) = (0usize, 0.0);
        for (rank, &img) in order.iter().enumerate() {
            if m.ground_truth[img] == p {
                hits += 1;
                ap += hits as f64 / (rank + 1) as f64;
            }
        }
        total += ap / hits as f64;
    }
    Ok(100.0 * total / m.n_prompts as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_separation_is_100() {
        let m = SimilarityMatrix::new(vec![vec![0.9, 0.1], vec![0.8, 0.3], vec![0.2, 0.7]], vec![0, 0, 1], 2).unwrap();
        assert_eq!(clip_ap(&m).unwrap(), 100.0);
    }

    #[test]
    fn single_positive_ranked_last() {
        // prompt 1 has one positive ranked last of 4: AP 1/4
        let scores = vec![vec![1.0, 0.9], vec![1.0, 0.8], vec![1.0, 0.7], vec![0.0, 0.1]];
        let m = SimilarityMatrix::new(scores, vec![0, 0, 0, 1], 2).unwrap();
        let ap = clip_ap(&m).unwrap();
        // prompt 0: positives at ranks 1..3 → 1
        assert!((ap - 100.0 * (1.0 + 0.25) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_prompt_rejected() {
        assert!(SimilarityMatrix::new(vec![vec![1.0]], vec![0], 1).is_err());
    }
}
