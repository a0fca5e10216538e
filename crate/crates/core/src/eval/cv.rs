use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{confusion, metrics, EvalError};
use crate::dataset::Label;
use crate::models::{fit, ClassifierSpec};
use crate::textpipe::DocumentVector;
use crate::util::rng_for;

const FOLD_STREAM: u64 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvScore {
    Accuracy,
    F1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvConfig {
    pub k: usize,
    pub seed: u64,
    pub score: CvScore,
    pub stratified: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            k: 10,
            seed: 0,
            score: CvScore::Accuracy,
            stratified: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub mean: f64,
    /// Population standard deviation over folds.
    pub std: f64,
    pub fold_scores: Vec<f64>,
}

/// Fold index of every sample.
///
/// Stratified: each class is shuffled, the class lists are concatenated, and
/// position `i` of the concatenation goes to fold `i mod k`. Fold sizes then
/// differ by at most one and every fold gets its share of each class.
pub fn fold_assignment(y: &[Label], cfg: &CvConfig) -> Result<Vec<usize>, EvalError> {
    let k = cfg.k.max(2);
    let mut rng = rng_for(cfg.seed, FOLD_STREAM);
    let order: Vec<usize> = if cfg.stratified {
        let mut out = Vec::with_capacity(y.len());
        for label in [Label::Dependent, Label::Independent] {
            let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == label).collect();
            if members.len() < k {
                return Err(EvalError::TooFewSamples {
                    label,
                    count: members.len(),
                    k,
                });
            }
            members.shuffle(&mut rng);
            out.extend(members);
        }
        out
    } else {
        if y.len() < k {
            return Err(EvalError::TooFewSamples {
                label: Label::POSITIVE,
                count: y.len(),
                k,
            });
        }
        let mut all: Vec<usize> = (0..y.len()).collect();
        all.shuffle(&mut rng);
        all
    };
    let mut fold = vec![0; y.len()];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % k;
    }
    Ok(fold)
}

/// Trains `k` models, each on all folds but one, and scores the held-out
/// fold. Folds train in parallel; scores come back in fold order.
pub fn cross_validate(
    spec: &ClassifierSpec,
    x: &[DocumentVector],
    y: &[Label],
    cfg: &CvConfig,
) -> Result<CvResult, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch {
            truth: y.len(),
            predicted: x.len(),
        });
    }
    let folds = fold_assignment(y, cfg)?;
    let k = cfg.k.max(2);
    let fold_scores = (0..k)
        .into_par_iter()
        .map(|f| -> Result<f64, EvalError> {
            let (mut tx, mut ty, mut vx, mut vy) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for i in 0..x.len() {
                if folds[i] == f {
                    vx.push(x[i].clone());
                    vy.push(y[i]);
                } else {
                    tx.push(x[i].clone());
                    ty.push(y[i]);
                }
            }
            let model = fit(spec, &tx, &ty)?;
            let pred: Vec<Label> = model.predict_batch(&vx)?.into_iter().map(|p| p.label).collect();
            let m = metrics(&confusion(&vy, &pred, Label::POSITIVE)?)?;
            Ok(match cfg.score {
                CvScore::Accuracy => m.accuracy,
                CvScore::F1 => m.f1,
            })
        })
        .collect::<Result<Vec<f64>, EvalError>>()?;
    let mean = fold_scores.iter().sum::<f64>() / k as f64;
    let var = fold_scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / k as f64;
    Ok(CvResult {
        mean,
        std: var.sqrt(),
        fold_scores,
    })
}
