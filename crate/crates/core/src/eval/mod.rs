//! Confusion counts, the four headline metrics, and stratified k-fold
//! cross-validation.

mod cv;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Label;
use crate::models::{ModelError, TrainedClassifier};
use crate::textpipe::DocumentVector;

pub use cv::{cross_validate, fold_assignment, CvConfig, CvResult, CvScore};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// The same counts with the other class treated as positive.
    pub fn transposed(&self) -> Self {
        Self::new(self.tn, self.fn_, self.tp, self.fp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv_std: Option<f64>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("label lists differ in length ({truth} vs {predicted})")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("{k}-fold validation needs at least {k} samples per class; {label} has {count}")]
    TooFewSamples { label: Label, count: usize, k: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl EvalError {
    pub fn code(&self) -> &'static str {
        match self {
            EvalError::LengthMismatch { .. } => "LENGTH_MISMATCH",
            EvalError::EmptyMatrix => "EMPTY_MATRIX",
            EvalError::TooFewSamples { .. } => "TOO_FEW_SAMPLES",
            EvalError::Model(e) => e.code(),
        }
    }
}

pub fn confusion(y_true: &[Label], y_pred: &[Label], positive: Label) -> Result<ConfusionMatrix, EvalError> {
    if y_true.len() != y_pred.len() || y_true.is_empty() {
        return Err(EvalError::LengthMismatch {
            truth: y_true.len(),
            predicted: y_pred.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == positive, p == positive) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fn_ += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// F1 is `2tp / (2tp + fp + fn)`; precision and recall are 0 on a zero
/// denominator.
pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricBundle, EvalError> {
    if cm.total() == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    Ok(MetricBundle {
        f1: ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_),
        precision: ratio(cm.tp, cm.tp + cm.fp),
        recall: ratio(cm.tp, cm.tp + cm.fn_),
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        cv_mean: None,
        cv_std: None,
    })
}

/// Confusion counts of `model` on a labeled evaluation set, positive = DEPENDENT.
pub fn evaluate(model: &TrainedClassifier, x: &[DocumentVector], y: &[Label]) -> Result<ConfusionMatrix, EvalError> {
    let pred: Vec<Label> = model.predict_batch(x)?.into_iter().map(|p| p.label).collect();
    confusion(y, &pred, Label::POSITIVE)
}
