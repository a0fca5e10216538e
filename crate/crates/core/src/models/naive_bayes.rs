use serde::{Deserialize, Serialize};

use super::{ModelError, TrainingSet};
use crate::textpipe::DocumentVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NaiveBayesParams {
    /// Additive (Laplace) smoothing.
    pub alpha: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        Self { alpha: 1.0 }
    }
}

/// Multinomial naive Bayes; feature values act as fractional counts.
/// Index 0 of each pair is the positive class, index 1 the negative class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub class_log_prior: [f64; 2],
    pub feature_log_prob: [Vec<f64>; 2],
}

impl NaiveBayesModel {
    pub(crate) fn fit(data: &TrainingSet<'_>, p: &NaiveBayesParams) -> Result<Self, ModelError> {
        let d = data.dim;
        let mut counts = [vec![0.0; d], vec![0.0; d]];
        let mut docs = [0usize; 2];
        for (x, &pos) in data.x.iter().zip(&data.y) {
            let c = if pos { 0 } else { 1 };
            docs[c] += 1;
            for &(j, v) in x.entries() {
                if v < 0.0 {
                    return Err(ModelError::NegativeFeature {
                        column: j as usize,
                        value: v,
                    });
                }
                counts[c][j as usize] += v;
            }
        }
        let n = data.x.len() as f64;
        let log_prob = |row: &Vec<f64>| -> Vec<f64> {
            let denom = (row.iter().sum::<f64>() + p.alpha * d as f64).ln();
            row.iter().map(|c| (c + p.alpha).ln() - denom).collect()
        };
        Ok(Self {
            class_log_prior: [(docs[0] as f64 / n).ln(), (docs[1] as f64 / n).ln()],
            feature_log_prob: [log_prob(&counts[0]), log_prob(&counts[1])],
        })
    }

    pub fn positive_probability(&self, x: &DocumentVector) -> f64 {
        let score = |c: usize| {
            self.class_log_prior[c]
                + x.entries()
                    .iter()
                    .map(|&(j, v)| v * self.feature_log_prob[c][j as usize])
                    .sum::<f64>()
        };
        let (sp, sn) = (score(0), score(1));
        1.0 / (1.0 + (sn - sp).exp())
    }
}
