//! Five binary classifiers behind one fit/predict contract.
//!
//! Every family reports, per sample, the probability of the positive class
//! (DEPENDENT). The predicted label is positive when that probability is at
//! least 0.5, and the reported confidence is the probability of the predicted
//! label. The linear SVC squashes its signed margin through the logistic
//! function to fit the same contract.
//!
//! An all-zero input vector carries no evidence; every family answers it with
//! the training-set majority class and its prior share as confidence.

mod forest;
mod logistic;
mod naive_bayes;
mod svc;
mod tree;

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Label;
use crate::textpipe::DocumentVector;

pub use forest::{ForestParams, RandomForest};
pub use logistic::{logistic_objective, LogisticModel, LogisticParams};
pub use naive_bayes::{NaiveBayesModel, NaiveBayesParams};
pub use svc::{LinearSvc, SvcParams};
pub use tree::{DecisionTree, MaxFeatures, TreeParams};

/// Classifier families, in their canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    LogisticRegression,
    NaiveBayes,
    DecisionTree,
    RandomForest,
    LinearSvc,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::LogisticRegression,
        Family::NaiveBayes,
        Family::DecisionTree,
        Family::RandomForest,
        Family::LinearSvc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::LogisticRegression => "logistic_regression",
            Family::NaiveBayes => "naive_bayes",
            Family::DecisionTree => "decision_tree",
            Family::RandomForest => "random_forest",
            Family::LinearSvc => "linear_svc",
        }
    }

    pub fn default_hyperparams(self) -> Hyperparams {
        match self {
            Family::LogisticRegression => Hyperparams::LogisticRegression(Default::default()),
            Family::NaiveBayes => Hyperparams::NaiveBayes(Default::default()),
            Family::DecisionTree => Hyperparams::DecisionTree(Default::default()),
            Family::RandomForest => Hyperparams::RandomForest(Default::default()),
            Family::LinearSvc => Hyperparams::LinearSvc(Default::default()),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Family {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| ModelError::InvalidHyperparams(format!("unknown family `{s}`")))
    }
}

/// Family plus its hyperparameters. Serialized with a `family` tag, e.g.
/// `{"family": "random_forest", "n_trees": 50}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Hyperparams {
    LogisticRegression(LogisticParams),
    NaiveBayes(NaiveBayesParams),
    DecisionTree(TreeParams),
    RandomForest(ForestParams),
    LinearSvc(SvcParams),
}

impl Hyperparams {
    pub fn family(&self) -> Family {
        match self {
            Hyperparams::LogisticRegression(_) => Family::LogisticRegression,
            Hyperparams::NaiveBayes(_) => Family::NaiveBayes,
            Hyperparams::DecisionTree(_) => Family::DecisionTree,
            Hyperparams::RandomForest(_) => Family::RandomForest,
            Hyperparams::LinearSvc(_) => Family::LinearSvc,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidHyperparams(m.to_string()));
        match self {
            Hyperparams::LogisticRegression(p) => {
                if !(p.lambda > 0.0 && p.lambda.is_finite()) {
                    return bad("logistic_regression.lambda must be positive");
                }
                if !(p.tol > 0.0) || p.max_iter == 0 {
                    return bad("logistic_regression needs tol > 0 and max_iter >= 1");
                }
            }
            Hyperparams::NaiveBayes(p) => {
                if !(p.alpha > 0.0 && p.alpha.is_finite()) {
                    return bad("naive_bayes.alpha must be positive");
                }
            }
            Hyperparams::DecisionTree(p) => p.validate()?,
            Hyperparams::RandomForest(p) => {
                if p.n_trees == 0 {
                    return bad("random_forest.n_trees must be at least 1");
                }
                p.tree_params().validate()?;
            }
            Hyperparams::LinearSvc(p) => {
                if !(p.c > 0.0 && p.c.is_finite()) || p.epochs == 0 {
                    return bad("linear_svc needs c > 0 and epochs >= 1");
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSpec {
    pub hyperparams: Hyperparams,
    #[serde(default)]
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(hyperparams: Hyperparams, seed: u64) -> Self {
        Self { hyperparams, seed }
    }

    pub fn default_for(family: Family, seed: u64) -> Self {
        Self::new(family.default_hyperparams(), seed)
    }

    pub fn family(&self) -> Family {
        self.hyperparams.family()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    /// Probability of `label`, in [0.5, 1].
    pub confidence: f64,
    /// Probability of the positive class; the two class probabilities sum to 1.
    pub positive_probability: f64,
}

impl Prediction {
    pub fn from_positive_probability(p: f64) -> Self {
        let p = p.clamp(0.0, 1.0);
        let positive = p >= 0.5;
        Self {
            label: Label::from_positive(positive),
            confidence: if positive { p } else { 1.0 - p },
            positive_probability: p,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedModel {
    LogisticRegression(LogisticModel),
    NaiveBayes(NaiveBayesModel),
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    LinearSvc(LinearSvc),
}

impl FittedModel {
    fn positive_probability(&self, x: &DocumentVector) -> f64 {
        match self {
            FittedModel::LogisticRegression(m) => m.positive_probability(x),
            FittedModel::NaiveBayes(m) => m.positive_probability(x),
            FittedModel::DecisionTree(m) => m.positive_probability(x),
            FittedModel::RandomForest(m) => m.positive_probability(x),
            FittedModel::LinearSvc(m) => m.positive_probability(x),
        }
    }
}

/// A fitted, immutable classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub spec: ClassifierSpec,
    pub model: FittedModel,
    pub dim: usize,
    pub majority: Label,
    pub majority_share: f64,
    /// SHA-256 over the training vectors and labels.
    pub training_fingerprint: String,
    pub train_seconds: f64,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training data holds a single class ({0})")]
    SingleClassTraining(Label),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("need at least 2 samples with one label each, got {samples} samples and {labels} labels")]
    TooFewSamples { samples: usize, labels: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("naive bayes needs non-negative features; column {column} is {value}")]
    NegativeFeature { column: usize, value: f64 },
    #[error("model blob: {0}")]
    Blob(String),
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::SingleClassTraining(_) => "SINGLE_CLASS_TRAINING",
            ModelError::DimensionMismatch { .. } => "DIMENSION_MISMATCH",
            ModelError::TooFewSamples { .. } => "TOO_FEW_SAMPLES",
            ModelError::InvalidHyperparams(_) => "INVALID_HYPERPARAMS",
            ModelError::NegativeFeature { .. } => "NEGATIVE_FEATURE",
            ModelError::Blob(_) => "INVALID_MODEL_BLOB",
        }
    }
}

/// Borrowed training data with labels mapped to `is_positive`.
pub(crate) struct TrainingSet<'a> {
    pub x: &'a [DocumentVector],
    pub y: Vec<bool>,
    pub dim: usize,
}

impl TrainingSet<'_> {
    pub fn n_positive(&self) -> usize {
        self.y.iter().filter(|&&p| p).count()
    }
}

fn fingerprint(x: &[DocumentVector], y: &[Label]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for (v, l) in x.iter().zip(y) {
        h.update((v.dim() as u64).to_le_bytes());
        for &(i, w) in v.entries() {
            h.update(i.to_le_bytes());
            h.update(w.to_bits().to_le_bytes());
        }
        h.update([l.is_positive() as u8]);
    }
    hex::encode(h.finalize())
}

/// Fits one classifier. Same spec, seed and data give the same parameters.
pub fn fit(spec: &ClassifierSpec, x: &[DocumentVector], y: &[Label]) -> Result<TrainedClassifier, ModelError> {
    spec.hyperparams.validate()?;
    if x.len() != y.len() || x.len() < 2 {
        return Err(ModelError::TooFewSamples {
            samples: x.len(),
            labels: y.len(),
        });
    }
    let dim = x[0].dim();
    if let Some(bad) = x.iter().find(|v| v.dim() != dim) {
        return Err(ModelError::DimensionMismatch {
            expected: dim,
            got: bad.dim(),
        });
    }
    let data = TrainingSet {
        x,
        y: y.iter().map(|l| l.is_positive()).collect(),
        dim,
    };
    let n_pos = data.n_positive();
    if n_pos == 0 || n_pos == x.len() {
        return Err(ModelError::SingleClassTraining(y[0]));
    }
    let positive_share = n_pos as f64 / x.len() as f64;
    let (majority, majority_share) = if positive_share >= 0.5 {
        (Label::POSITIVE, positive_share)
    } else {
        (Label::POSITIVE.other(), 1.0 - positive_share)
    };

    let started = Instant::now();
    let model = match &spec.hyperparams {
        Hyperparams::LogisticRegression(p) => FittedModel::LogisticRegression(LogisticModel::fit(&data, p)),
        Hyperparams::NaiveBayes(p) => FittedModel::NaiveBayes(NaiveBayesModel::fit(&data, p)?),
        Hyperparams::DecisionTree(p) => FittedModel::DecisionTree(DecisionTree::fit(&data, p, spec.seed)),
        Hyperparams::RandomForest(p) => FittedModel::RandomForest(RandomForest::fit(&data, p, spec.seed)),
        Hyperparams::LinearSvc(p) => FittedModel::LinearSvc(LinearSvc::fit(&data, p, spec.seed)),
    };
    let train_seconds = started.elapsed().as_secs_f64();

    Ok(TrainedClassifier {
        spec: spec.clone(),
        model,
        dim,
        majority,
        majority_share,
        training_fingerprint: fingerprint(x, y),
        train_seconds,
    })
}

const BLOB_MAGIC: &[u8; 8] = b"AROIMDL\0";
const BLOB_VERSION: u8 = 1;

impl TrainedClassifier {
    pub fn family(&self) -> Family {
        self.spec.family()
    }

    pub fn predict(&self, x: &DocumentVector) -> Result<Prediction, ModelError> {
        if x.dim() != self.dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        if x.is_zero() {
            let p = if self.majority.is_positive() {
                self.majority_share
            } else {
                1.0 - self.majority_share
            };
            return Ok(Prediction::from_positive_probability(p));
        }
        Ok(Prediction::from_positive_probability(
            self.model.positive_probability(x),
        ))
    }

    pub fn predict_batch(&self, xs: &[DocumentVector]) -> Result<Vec<Prediction>, ModelError> {
        xs.iter().map(|x| self.predict(x)).collect()
    }

    /// Versioned binary blob: 8-byte magic, one version byte, JSON body.
    pub fn to_blob(&self) -> Vec<u8> {
        let mut out = BLOB_MAGIC.to_vec();
        out.push(BLOB_VERSION);
        out.extend(serde_json::to_vec(self).expect("model serializes"));
        out
    }

    pub fn from_blob(bytes: &[u8]) -> Result<Self, ModelError> {
        if bytes.len() < 9 || &bytes[..8] != BLOB_MAGIC {
            return Err(ModelError::Blob("bad magic header".into()));
        }
        if bytes[8] != BLOB_VERSION {
            return Err(ModelError::Blob(format!("unsupported version {}", bytes[8])));
        }
        serde_json::from_slice(&bytes[9..]).map_err(|e| ModelError::Blob(e.to_string()))
    }
}

/// Free-function form of [`TrainedClassifier::predict`].
pub fn predict(model: &TrainedClassifier, x: &DocumentVector) -> Result<Prediction, ModelError> {
    model.predict(x)
}

pub fn predict_batch(model: &TrainedClassifier, xs: &[DocumentVector]) -> Result<Vec<Prediction>, ModelError> {
    model.predict_batch(xs)
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
