use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{sigmoid, TrainingSet};
use crate::textpipe::DocumentVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogisticParams {
    /// L2 penalty on the weights; the bias is not penalized.
    pub lambda: f64,
    /// Stop once the gradient infinity-norm drops to this value.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            tol: 1e-6,
            max_iter: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Infinity-norm of the objective gradient at the returned parameters.
    pub gradient_norm: f64,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Penalized negative log-likelihood and its gradient.
///
/// `f(w, b) = sum_i [log(1 + e^{z_i}) - y_i z_i] + lambda/2 |w|^2` with
/// `z_i = w.x_i + b` and `y_i` in {0, 1} (`true` = positive class).
/// Returns `(f, df/dw, df/db)`.
pub fn logistic_objective(
    x: &[DocumentVector],
    y: &[bool],
    weights: &[f64],
    bias: f64,
    lambda: f64,
) -> (f64, Vec<f64>, f64) {
    let mut f = 0.5 * lambda * weights.iter().map(|w| w * w).sum::<f64>();
    let mut gw: Vec<f64> = weights.iter().map(|w| lambda * w).collect();
    let mut gb = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let z = xi.dot(weights) + bias;
        let t = if yi { 1.0 } else { 0.0 };
        f += softplus(z) - t * z;
        let r = sigmoid(z) - t;
        for &(j, v) in xi.entries() {
            gw[j as usize] += r * v;
        }
        gb += r;
    }
    (f, gw, gb)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

impl LogisticModel {
    pub(crate) fn fit(data: &TrainingSet<'_>, p: &LogisticParams) -> Self {
        // theta = [w..., b]
        let d = data.dim;
        let eval = |theta: &[f64]| {
            let (f, mut g, gb) = logistic_objective(data.x, &data.y, &theta[..d], theta[d], p.lambda);
            g.push(gb);
            (f, g)
        };

        let mut theta = vec![0.0; d + 1];
        let (mut f, mut g) = eval(&theta);
        let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
        const MEMORY: usize = 10;
        let mut iterations = 0;

        while iterations < p.max_iter && inf_norm(&g) > p.tol {
            iterations += 1;

            // Two-loop recursion for the quasi-Newton direction.
            let mut q = g.clone();
            let mut alphas = Vec::with_capacity(history.len());
            for (s, yv, rho) in history.iter().rev() {
                let a = rho * dot(s, &q);
                for (qi, yi) in q.iter_mut().zip(yv) {
                    *qi -= a * yi;
                }
                alphas.push(a);
            }
            if let Some((s, yv, _)) = history.back() {
                let gamma = dot(s, yv) / dot(yv, yv);
                q.iter_mut().for_each(|v| *v *= gamma);
            } else {
                let scale = 1.0 / inf_norm(&g).max(1.0);
                q.iter_mut().for_each(|v| *v *= scale);
            }
            for ((s, yv, rho), a) in history.iter().zip(alphas.iter().rev()) {
                let b = rho * dot(yv, &q);
                for (qi, si) in q.iter_mut().zip(s) {
                    *qi += (a - b) * si;
                }
            }
            let mut dir: Vec<f64> = q.into_iter().map(|v| -v).collect();
            let mut slope = dot(&g, &dir);
            if slope >= 0.0 {
                history.clear();
                dir = g.iter().map(|v| -v).collect();
                slope = dot(&g, &dir);
            }

            // Backtracking line search on the Armijo condition.
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let cand: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
                let (fc, gc) = eval(&cand);
                if fc <= f + 1e-4 * step * slope {
                    accepted = Some((cand, fc, gc));
                    break;
                }
                step *= 0.5;
            }
            let Some((cand, fc, gc)) = accepted else {
                break;
            };
            let s: Vec<f64> = cand.iter().zip(&theta).map(|(a, b)| a - b).collect();
            let yv: Vec<f64> = gc.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &yv);
            if sy > 1e-12 {
                if history.len() == MEMORY {
                    history.pop_front();
                }
                history.push_back((s, yv, 1.0 / sy));
            }
            theta = cand;
            f = fc;
            g = gc;
        }

        let bias = theta.pop().unwrap_or(0.0);
        LogisticModel {
            weights: theta,
            bias,
            iterations,
            gradient_norm: inf_norm(&g),
        }
    }

    pub fn positive_probability(&self, x: &DocumentVector) -> f64 {
        sigmoid(x.dot(&self.weights) + self.bias)
    }
}
