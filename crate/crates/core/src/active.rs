//! Pool-based active learning.
//!
//! A session holds out a test split, labels a small stratified seed set from
//! the pool, and then alternates two steps. [`ActiveSession::next_batch`]
//! trains on the labeled rows, scores the unlabeled ones, and proposes the
//! rows below the confidence threshold in strategy order.
//! [`ActiveSession::submit_labels`] records the answers, retrains, and
//! appends the test-set metrics to the history.
//!
//! The loop stops when the budget is spent, the iteration cap is reached,
//! the pool is empty, or no unlabeled row falls below the threshold.
//!
//! Labels of pool rows are only read for the seed set and by [`simulate`],
//! which plays the oracle.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{split_indices, stratified_order, DatasetError, Label, LabeledPairDataset, SplitSpec};
use crate::eval::{confusion, metrics, MetricBundle};
use crate::models::{fit, ClassifierSpec, Family, ModelError, TrainedClassifier};
use crate::textpipe::{fit_pairs, DocumentVector, PipelineConfig, TextError};
use crate::util::rng_for;

const SEED_STREAM: u64 = 30;
const QUERY_STREAM: u64 = 40_000;
const OVERSAMPLE_STREAM: u64 = 50_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Sampling {
    #[default]
    LeastConfidence,
    Margin,
    Random,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Resampling {
    #[default]
    None,
    RandomOversample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ALConfig {
    /// Rows whose top-class confidence is below this are query candidates.
    pub threshold: f64,
    pub max_iterations: usize,
    /// Share of the dataset held out for the session's own evaluation.
    pub test_size: f64,
    pub sampling: Sampling,
    pub classifier: ClassifierSpec,
    pub resampling: Resampling,
    /// Oracle answers the session may request, seed set excluded.
    pub annotation_budget: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub pipeline: PipelineConfig,
}

impl Default for ALConfig {
    fn default() -> Self {
        Self {
            threshold: 0.8,
            max_iterations: 20,
            test_size: 0.2,
            sampling: Sampling::LeastConfidence,
            classifier: ClassifierSpec::default_for(Family::NaiveBayes, 0),
            resampling: Resampling::None,
            annotation_budget: 200,
            batch_size: 10,
            seed: 0,
            pipeline: PipelineConfig::default(),
        }
    }
}

impl ALConfig {
    /// A budget of 0 is accepted and yields a seed-only session.
    pub fn validate(&self) -> Result<(), ActiveError> {
        let bad = |m: &str| Err(ActiveError::InvalidConfig(m.to_string()));
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad("threshold must lie in (0, 1)");
        }
        if !(self.test_size > 0.0 && self.test_size < 1.0) {
            return bad("test_size must lie in (0, 1)");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.annotation_budget != 0 && self.annotation_budget < self.batch_size {
            return bad("annotation_budget must be 0 or at least batch_size");
        }
        self.classifier
            .hyperparams
            .validate()
            .map_err(|e| ActiveError::InvalidConfig(e.to_string()))?;
        self.pipeline
            .validate()
            .map_err(|e| ActiveError::InvalidConfig(e.to_string()))?;
        Ok(())
    }

    pub fn seed_set_size(&self) -> usize {
        10.max(2 * self.batch_size)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryItem {
    pub id: String,
    pub text_a: String,
    pub text_b: String,
    pub confidence: f64,
}

/// Rows proposed for labeling, ascending by model confidence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryBatch {
    pub iteration: usize,
    pub items: Vec<QueryItem>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StopReason {
    BudgetExhausted,
    MaxIterations,
    PoolExhausted,
    Converged,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledId {
    pub id: String,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ALState {
    /// In pool order.
    pub labeled: Vec<LabeledId>,
    /// In pool order.
    pub unlabeled: Vec<String>,
    pub iteration: usize,
    pub annotations_spent: usize,
    /// Test-set metrics of the seed-set model.
    pub initial_metrics: MetricBundle,
    /// One entry per completed iteration.
    pub history: Vec<MetricBundle>,
    pub pending: Option<QueryBatch>,
    pub stopped: Option<StopReason>,
}

#[derive(Debug, Error)]
pub enum ActiveError {
    #[error("invalid active-learning config: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    TooSmall(String),
    #[error("sample `{0}` was not in the issued batch")]
    UnknownSample(String),
    #[error("{requested} answers would exceed the budget ({spent} of {budget} spent)")]
    BudgetExceeded {
        spent: usize,
        requested: usize,
        budget: usize,
    },
    #[error("no batch is waiting for labels")]
    NoPendingBatch,
    #[error("state does not match this dataset: {0}")]
    StateMismatch(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl ActiveError {
    pub fn code(&self) -> &'static str {
        match self {
            ActiveError::InvalidConfig(_) => "INVALID_CONFIG",
            ActiveError::TooSmall(_) => "TOO_SMALL",
            ActiveError::UnknownSample(_) => "UNKNOWN_SAMPLE",
            ActiveError::BudgetExceeded { .. } => "BUDGET_EXCEEDED",
            ActiveError::NoPendingBatch => "NO_PENDING_BATCH",
            ActiveError::StateMismatch(_) => "STATE_MISMATCH",
            ActiveError::Dataset(e) => e.code(),
            ActiveError::Text(e) => e.code(),
            ActiveError::Model(e) => e.code(),
        }
    }
}

struct PoolRow {
    id: String,
    text_a: String,
    text_b: String,
    truth: Label,
    x: DocumentVector,
}

/// A running session. Operations on one session must be externally ordered.
pub struct ActiveSession {
    cfg: ALConfig,
    pool: Vec<PoolRow>,
    by_id: HashMap<String, usize>,
    /// Known label per pool row.
    labels: Vec<Option<Label>>,
    test_x: Vec<DocumentVector>,
    test_y: Vec<Label>,
    state: ALState,
}

impl ActiveSession {
    pub fn start(ds: &LabeledPairDataset, cfg: &ALConfig) -> Result<Self, ActiveError> {
        cfg.validate()?;
        let all_labels = ds.labels();
        let split = split_indices(
            &all_labels,
            &SplitSpec {
                test_fraction: cfg.test_size,
                seed: cfg.seed,
                stratified: true,
            },
        )?;
        let pairs = ds.pairs();
        let vectorizer = fit_pairs(split.train.iter().map(|&i| &pairs[i]), &cfg.pipeline)?;
        let pool: Vec<PoolRow> = split
            .train
            .iter()
            .map(|&i| PoolRow {
                id: pairs[i].id.clone(),
                text_a: pairs[i].text_a.clone(),
                text_b: pairs[i].text_b.clone(),
                truth: pairs[i].label,
                x: vectorizer.vectorize_pair(&pairs[i]),
            })
            .collect();
        let by_id = pool.iter().enumerate().map(|(i, r)| (r.id.clone(), i)).collect();

        // Stratified seed set over pool positions.
        let pool_labels: Vec<Label> = pool.iter().map(|r| r.truth).collect();
        let positions: Vec<usize> = (0..pool.len()).collect();
        let seed_size = cfg.seed_set_size();
        if pool.len() <= seed_size {
            return Err(ActiveError::TooSmall(format!(
                "pool of {} rows cannot hold a seed set of {seed_size} plus unlabeled rows",
                pool.len()
            )));
        }
        let order = stratified_order(&pool_labels, &positions, cfg.seed ^ SEED_STREAM);
        let mut labels = vec![None; pool.len()];
        for &i in &order[..seed_size] {
            labels[i] = Some(pool[i].truth);
        }
        let n_pos = labels.iter().flatten().filter(|l| l.is_positive()).count();
        if n_pos < 2 || seed_size - n_pos < 2 {
            return Err(ActiveError::TooSmall(format!(
                "seed set of {seed_size} needs at least 2 rows of each class, got {n_pos} DEPENDENT"
            )));
        }

        let mut session = ActiveSession {
            cfg: cfg.clone(),
            pool,
            by_id,
            labels,
            test_x: split
                .test
                .iter()
                .map(|&i| vectorizer.vectorize_pair(&pairs[i]))
                .collect(),
            test_y: split.test.iter().map(|&i| all_labels[i]).collect(),
            state: ALState {
                labeled: Vec::new(),
                unlabeled: Vec::new(),
                iteration: 0,
                annotations_spent: 0,
                initial_metrics: MetricBundle {
                    f1: 0.0,
                    precision: 0.0,
                    recall: 0.0,
                    accuracy: 0.0,
                    cv_mean: None,
                    cv_std: None,
                },
                history: Vec::new(),
                pending: None,
                stopped: None,
            },
        };
        let model = session.train()?;
        session.state.initial_metrics = session.evaluate(&model)?;
        session.sync_membership();
        Ok(session)
    }

    /// Rebuilds a session from its dataset, config and a saved state.
    pub fn restore(ds: &LabeledPairDataset, cfg: &ALConfig, state: ALState) -> Result<Self, ActiveError> {
        let mut s = Self::start(ds, cfg)?;
        let mut labels = vec![None; s.pool.len()];
        for l in &state.labeled {
            let &i = s
                .by_id
                .get(&l.id)
                .ok_or_else(|| ActiveError::StateMismatch(format!("unknown id `{}`", l.id)))?;
            labels[i] = Some(l.label);
        }
        if state.labeled.len() + state.unlabeled.len() != s.pool.len() {
            return Err(ActiveError::StateMismatch(
                "labeled and unlabeled do not cover the pool".into(),
            ));
        }
        s.labels = labels;
        s.state = state;
        Ok(s)
    }

    pub fn state(&self) -> &ALState {
        &self.state
    }

    pub fn config(&self) -> &ALConfig {
        &self.cfg
    }

    pub fn pool_size(&self) -> usize {
        self.pool.len()
    }

    pub fn test_size(&self) -> usize {
        self.test_y.len()
    }

    fn sync_membership(&mut self) {
        self.state.labeled.clear();
        self.state.unlabeled.clear();
        for (row, label) in self.pool.iter().zip(&self.labels) {
            match label {
                Some(l) => self.state.labeled.push(LabeledId {
                    id: row.id.clone(),
                    label: *l,
                }),
                None => self.state.unlabeled.push(row.id.clone()),
            }
        }
    }

    /// Fits on the labeled rows in pool order, oversampling the minority
    /// class first when configured.
    fn train(&self) -> Result<TrainedClassifier, ActiveError> {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (row, label) in self.pool.iter().zip(&self.labels) {
            if let Some(l) = label {
                x.push(row.x.clone());
                y.push(*l);
            }
        }
        if self.cfg.resampling == Resampling::RandomOversample {
            let n_pos = y.iter().filter(|l| l.is_positive()).count();
            let n_neg = y.len() - n_pos;
            if n_pos > 0 && n_neg > 0 && n_pos != n_neg {
                let minority_positive = n_pos < n_neg;
                let members: Vec<usize> = (0..y.len())
                    .filter(|&i| y[i].is_positive() == minority_positive)
                    .collect();
                let mut rng = rng_for(self.cfg.seed, OVERSAMPLE_STREAM + self.state.iteration as u64);
                for _ in 0..n_pos.abs_diff(n_neg) {
                    let pick = members[rng.gen_range(0..members.len())];
                    x.push(x[pick].clone());
                    y.push(y[pick]);
                }
            }
        }
        Ok(fit(&self.cfg.classifier, &x, &y)?)
    }

    fn evaluate(&self, model: &TrainedClassifier) -> Result<MetricBundle, ActiveError> {
        let pred: Vec<Label> = model
            .predict_batch(&self.test_x)?
            .into_iter()
            .map(|p| p.label)
            .collect();
        let cm = confusion(&self.test_y, &pred, Label::POSITIVE).expect("non-empty test set");
        Ok(metrics(&cm).expect("non-empty test set"))
    }

    fn stop_reason(&self) -> Option<StopReason> {
        if self.state.annotations_spent >= self.cfg.annotation_budget {
            Some(StopReason::BudgetExhausted)
        } else if self.state.iteration >= self.cfg.max_iterations {
            Some(StopReason::MaxIterations)
        } else if self.state.unlabeled.is_empty() {
            Some(StopReason::PoolExhausted)
        } else {
            None
        }
    }

    /// The next rows to label, or `None` once the session has stopped. A
    /// batch stays pending, and is returned again, until answered.
    pub fn next_batch(&mut self) -> Result<Option<QueryBatch>, ActiveError> {
        if let Some(p) = &self.state.pending {
            return Ok(Some(p.clone()));
        }
        if self.state.stopped.is_some() {
            return Ok(None);
        }
        if let Some(reason) = self.stop_reason() {
            self.state.stopped = Some(reason);
            return Ok(None);
        }
        let model = self.train()?;
        let mut candidates: Vec<(usize, f64, f64)> = Vec::new();
        for (i, row) in self.pool.iter().enumerate() {
            if self.labels[i].is_none() {
                let p = model.predict(&row.x)?;
                if p.confidence < self.cfg.threshold {
                    candidates.push((i, p.confidence, (p.positive_probability - 0.5).abs()));
                }
            }
        }
        if candidates.is_empty() {
            self.state.stopped = Some(StopReason::Converged);
            return Ok(None);
        }
        match self.cfg.sampling {
            Sampling::LeastConfidence => candidates.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))),
            Sampling::Margin => candidates.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0))),
            Sampling::Random => {
                let mut rng = rng_for(self.cfg.seed, QUERY_STREAM + self.state.iteration as u64);
                candidates.shuffle(&mut rng);
            }
        }
        let room = self.cfg.annotation_budget - self.state.annotations_spent;
        candidates.truncate(self.cfg.batch_size.min(room));
        candidates.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let batch = QueryBatch {
            iteration: self.state.iteration,
            items: candidates
                .into_iter()
                .map(|(i, confidence, _)| QueryItem {
                    id: self.pool[i].id.clone(),
                    text_a: self.pool[i].text_a.clone(),
                    text_b: self.pool[i].text_b.clone(),
                    confidence,
                })
                .collect(),
        };
        self.state.pending = Some(batch.clone());
        Ok(Some(batch))
    }

    /// Records answers for (a subset of) the pending batch, retrains and
    /// appends one history entry. Unanswered rows return to the pool.
    pub fn submit_labels(&mut self, answers: &BTreeMap<String, Label>) -> Result<&ALState, ActiveError> {
        let pending = self.state.pending.as_ref().ok_or(ActiveError::NoPendingBatch)?;
        if let Some(unknown) = answers.keys().find(|id| !pending.items.iter().any(|it| &it.id == *id)) {
            return Err(ActiveError::UnknownSample(unknown.clone()));
        }
        if self.state.annotations_spent + answers.len() > self.cfg.annotation_budget {
            return Err(ActiveError::BudgetExceeded {
                spent: self.state.annotations_spent,
                requested: answers.len(),
                budget: self.cfg.annotation_budget,
            });
        }
        for (id, &label) in answers {
            self.labels[self.by_id[id]] = Some(label);
        }
        self.state.pending = None;
        self.state.annotations_spent += answers.len();
        self.state.iteration += 1;
        self.sync_membership();
        let model = self.train()?;
        let m = self.evaluate(&model)?;
        self.state.history.push(m);
        Ok(&self.state)
    }

    /// True labels of the pool, for simulated oracles.
    pub fn oracle(&self) -> BTreeMap<String, Label> {
        self.pool.iter().map(|r| (r.id.clone(), r.truth)).collect()
    }
}

pub fn start_session(ds: &LabeledPairDataset, cfg: &ALConfig) -> Result<ActiveSession, ActiveError> {
    ActiveSession::start(ds, cfg)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub annotations: usize,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub state: ALState,
    /// Starts with the seed-set point at 0 annotations.
    pub curve: Vec<CurvePoint>,
}

impl Simulation {
    /// Annotations spent when test F1 first reached `target`.
    pub fn annotations_to_reach(&self, target: f64) -> Option<usize> {
        self.curve.iter().find(|p| p.f1 >= target).map(|p| p.annotations)
    }

    /// `annotations,f1`
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("annotations,f1\n");
        for p in &self.curve {
            out.push_str(&format!("{},{}\n", p.annotations, p.f1));
        }
        out
    }
}

/// Runs a session to its stop condition, answering every batch from the
/// dataset's own labels. `on_step` sees the state after every submission.
pub fn simulate_with(
    ds: &LabeledPairDataset,
    cfg: &ALConfig,
    mut on_step: impl FnMut(&ALState, &QueryBatch),
) -> Result<Simulation, ActiveError> {
    let mut session = ActiveSession::start(ds, cfg)?;
    let oracle = session.oracle();
    let mut curve = vec![CurvePoint {
        annotations: 0,
        f1: session.state.initial_metrics.f1,
    }];
    while let Some(batch) = session.next_batch()? {
        let answers: BTreeMap<String, Label> = batch.items.iter().map(|it| (it.id.clone(), oracle[&it.id])).collect();
        let state = session.submit_labels(&answers)?;
        curve.push(CurvePoint {
            annotations: state.annotations_spent,
            f1: state.history.last().expect("one entry per submission").f1,
        });
        on_step(state, &batch);
    }
    Ok(Simulation {
        state: session.state,
        curve,
    })
}

pub fn simulate(ds: &LabeledPairDataset, cfg: &ALConfig) -> Result<Simulation, ActiveError> {
    simulate_with(ds, cfg, |_, _| {})
}
