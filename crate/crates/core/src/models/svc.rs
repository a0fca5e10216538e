use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{sigmoid, TrainingSet};
use crate::textpipe::DocumentVector;
use crate::util::rng_for;

const SHUFFLE_STREAM: u64 = 7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvcParams {
    pub c: f64,
    /// Full passes over the training set.
    pub epochs: usize,
}

impl Default for SvcParams {
    fn default() -> Self {
        Self { c: 1.0, epochs: 50 }
    }
}

/// Linear SVM trained by stochastic subgradient descent on
/// `lambda/2 |w|^2 + mean hinge`, with `lambda = 1 / (C n)` and step size
/// `1 / (lambda t)`. The bias is an extra always-one feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSvc {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvc {
    pub(crate) fn fit(data: &TrainingSet<'_>, p: &SvcParams, seed: u64) -> Self {
        let n = data.x.len();
        let lambda = 1.0 / (p.c * n as f64);
        // w = scale * v keeps the per-step shrink O(1).
        let mut v = vec![0.0; data.dim];
        let mut vb = 0.0;
        let mut scale = 1.0;
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = rng_for(seed, SHUFFLE_STREAM);
        let mut t = 0u64;

        for _ in 0..p.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let x = &data.x[i];
                let y = if data.y[i] { 1.0 } else { -1.0 };
                let margin = y * scale * (x.dot(&v) + vb);

                let shrink = 1.0 - 1.0 / t as f64;
                if shrink == 0.0 {
                    v.iter_mut().for_each(|w| *w = 0.0);
                    vb = 0.0;
                    scale = 1.0;
                } else {
                    scale *= shrink;
                }
                if margin < 1.0 {
                    let step = eta * y / scale;
                    for &(j, xv) in x.entries() {
                        v[j as usize] += step * xv;
                    }
                    vb += step;
                }
                if scale < 1e-9 {
                    v.iter_mut().for_each(|w| *w *= scale);
                    vb *= scale;
                    scale = 1.0;
                }
            }
        }
        LinearSvc {
            weights: v.iter().map(|w| w * scale).collect(),
            bias: vb * scale,
        }
    }

    pub fn margin(&self, x: &DocumentVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    pub fn positive_probability(&self, x: &DocumentVector) -> f64 {
        sigmoid(self.margin(x))
    }
}
