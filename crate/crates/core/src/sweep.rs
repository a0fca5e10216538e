//! The training-fraction grid.
//!
//! The dataset is split once into a training pool and a fixed test set. The
//! pool is put in a seeded, stratified order, and fraction `f` trains on the
//! first `round(f * pool)` rows of that order, so smaller fractions are
//! prefixes of larger ones. Each fraction gets its own vectorizer fitted on
//! its own rows only. Every (family, fraction) cell is an independent job
//! whose failure is recorded in the cell instead of aborting the grid.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{split_indices, stratified_order, DatasetError, Label, LabeledPairDataset, SplitSpec};
use crate::eval::{confusion, metrics, ConfusionMatrix, MetricBundle};
use crate::models::{fit, ClassifierSpec, Family, TrainedClassifier};
use crate::roi::{compute_benefit, compute_cost, compute_roi, CostParams};
use crate::textpipe::{fit_pairs, DocumentVector, PipelineConfig};

pub const DEFAULT_FRACTIONS: [f64; 8] = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_fractions")]
    pub fractions: Vec<f64>,
    #[serde(default = "default_families")]
    pub families: Vec<ClassifierSpec>,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    /// Seeds the stratified ordering of the training pool.
    #[serde(default)]
    pub seed: u64,
    /// Keep trained models so a store can persist them as blobs.
    #[serde(default)]
    pub persist_models: bool,
}

fn default_fractions() -> Vec<f64> {
    DEFAULT_FRACTIONS.to_vec()
}

fn default_families() -> Vec<ClassifierSpec> {
    Family::ALL.iter().map(|&f| ClassifierSpec::default_for(f, 0)).collect()
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            fractions: default_fractions(),
            families: default_families(),
            split: SplitSpec::default(),
            pipeline: PipelineConfig::default(),
            seed: 0,
            persist_models: false,
        }
    }
}

impl SweepConfig {
    /// All five families with default hyperparameters, every seed set to `seed`.
    pub fn with_seed(seed: u64) -> Self {
        let mut cfg = Self::default();
        cfg.seed = seed;
        cfg.split.seed = seed;
        for spec in &mut cfg.families {
            spec.seed = seed;
        }
        cfg
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: String| Err(SweepError::InvalidConfig(m));
        if self.fractions.is_empty() {
            return bad("fractions must not be empty".into());
        }
        if let Some(f) = self.fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return bad(format!("fraction {f} is outside (0, 1]"));
        }
        if self.fractions.windows(2).any(|w| w[0] >= w[1]) {
            return bad("fractions must be strictly increasing".into());
        }
        if self.families.is_empty() {
            return bad("at least one classifier family is required".into());
        }
        let mut seen: Vec<Family> = self.families.iter().map(|s| s.family()).collect();
        seen.sort();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return bad("each family may appear only once".into());
        }
        for spec in &self.families {
            spec.hyperparams
                .validate()
                .map_err(|e| SweepError::InvalidConfig(e.to_string()))?;
        }
        self.split
            .validate()
            .map_err(|e| SweepError::InvalidConfig(e.to_string()))?;
        self.pipeline
            .validate()
            .map_err(|e| SweepError::InvalidConfig(e.to_string()))?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellError {
    pub code: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub family: Family,
    pub fraction: f64,
    pub n_train_used: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricBundle>,
    pub train_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<CellError>,
}

impl SweepCell {
    pub fn is_ok(&self) -> bool {
        self.error.is_none() && self.confusion.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub dataset_fingerprint: String,
    /// Training pool ids in sweep order; fraction `f` used the first
    /// `n_train_used` of them.
    pub pool_order: Vec<String>,
    pub test_ids: Vec<String>,
    /// Family-major, fractions ascending within a family.
    pub cells: Vec<SweepCell>,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("every cell of the grid failed")]
    AllCellsErrored,
}

impl SweepError {
    pub fn code(&self) -> &'static str {
        match self {
            SweepError::InvalidConfig(_) => "INVALID_CONFIG",
            SweepError::Dataset(e) => e.code(),
            SweepError::AllCellsErrored => "ALL_CELLS_ERRORED",
        }
    }
}

/// Progress callbacks. Cells finish in any order when workers run in
/// parallel; `done` counts completions so far.
pub trait SweepObserver: Sync {
    fn cell_done(&self, _cell: &SweepCell, _done: usize, _total: usize) {}
    /// Called for every successfully trained model when
    /// [`SweepConfig::persist_models`] is set.
    fn model_trained(&self, _cell: &SweepCell, _model: &TrainedClassifier) {}
}

pub struct NoProgress;

impl SweepObserver for NoProgress {}

struct FractionData {
    n_train: usize,
    train_x: Vec<DocumentVector>,
    train_y: Vec<Label>,
    test_x: Vec<DocumentVector>,
}

fn prepare_fraction(
    ds: &LabeledPairDataset,
    order: &[usize],
    test: &[usize],
    fraction: f64,
    pipeline: &PipelineConfig,
) -> Result<FractionData, CellError> {
    let n_train = ((fraction * order.len() as f64).round() as usize).min(order.len());
    let rows = &order[..n_train];
    let pairs = ds.pairs();
    let vectorizer = fit_pairs(rows.iter().map(|&i| &pairs[i]), pipeline).map_err(|e| CellError {
        code: e.code().into(),
        message: e.to_string(),
    })?;
    Ok(FractionData {
        n_train,
        train_x: rows.iter().map(|&i| vectorizer.vectorize_pair(&pairs[i])).collect(),
        train_y: rows.iter().map(|&i| pairs[i].label).collect(),
        test_x: test.iter().map(|&i| vectorizer.vectorize_pair(&pairs[i])).collect(),
    })
}

/// Runs the grid on the global rayon pool, or on a dedicated pool of
/// `workers` threads when `workers > 0`.
pub fn run_sweep_with_workers(
    ds: &LabeledPairDataset,
    cfg: &SweepConfig,
    observer: &dyn SweepObserver,
    workers: usize,
) -> Result<SweepResult, SweepError> {
    if workers == 0 {
        return run_sweep(ds, cfg, observer);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SweepError::InvalidConfig(format!("worker pool: {e}")))?;
    pool.install(|| run_sweep(ds, cfg, observer))
}

pub fn run_sweep(
    ds: &LabeledPairDataset,
    cfg: &SweepConfig,
    observer: &dyn SweepObserver,
) -> Result<SweepResult, SweepError> {
    cfg.validate()?;
    let labels = ds.labels();
    let split = split_indices(&labels, &cfg.split)?;
    let order = stratified_order(&labels, &split.train, cfg.seed);
    let test_y: Vec<Label> = split.test.iter().map(|&i| labels[i]).collect();

    let total = cfg.fractions.len() * cfg.families.len();
    let done = AtomicUsize::new(0);

    // (fraction index, family index) -> cell
    let by_fraction: Vec<Vec<SweepCell>> = cfg
        .fractions
        .par_iter()
        .map(|&fraction| {
            let data = prepare_fraction(ds, &order, &split.test, fraction, &cfg.pipeline);
            cfg.families
                .par_iter()
                .map(|spec| {
                    let mut cell = SweepCell {
                        family: spec.family(),
                        fraction,
                        n_train_used: ((fraction * order.len() as f64).round() as usize).min(order.len()),
                        confusion: None,
                        metrics: None,
                        train_seconds: 0.0,
                        error: None,
                    };
                    let outcome = data.as_ref().map_err(Clone::clone).and_then(|d| {
                        let model = fit(spec, &d.train_x, &d.train_y).map_err(|e| CellError {
                            code: e.code().into(),
                            message: e.to_string(),
                        })?;
                        let pred: Vec<Label> = model
                            .predict_batch(&d.test_x)
                            .map_err(|e| CellError {
                                code: e.code().into(),
                                message: e.to_string(),
                            })?
                            .into_iter()
                            .map(|p| p.label)
                            .collect();
                        let cm = confusion(&test_y, &pred, Label::POSITIVE).map_err(|e| CellError {
                            code: e.code().into(),
                            message: e.to_string(),
                        })?;
                        Ok((model, cm, d.n_train))
                    });
                    match outcome {
                        Ok((model, cm, n_train)) => {
                            cell.n_train_used = n_train;
                            cell.metrics = metrics(&cm).ok();
                            cell.confusion = Some(cm);
                            cell.train_seconds = model.train_seconds;
                            if cfg.persist_models {
                                observer.model_trained(&cell, &model);
                            }
                        }
                        Err(e) => cell.error = Some(e),
                    }
                    let finished = done.fetch_add(1, Ordering::SeqCst) + 1;
                    observer.cell_done(&cell, finished, total);
                    cell
                })
                .collect()
        })
        .collect();

    let mut cells = Vec::with_capacity(total);
    for fam in 0..cfg.families.len() {
        for row in &by_fraction {
            cells.push(row[fam].clone());
        }
    }
    let pairs = ds.pairs();
    Ok(SweepResult {
        config: cfg.clone(),
        dataset_fingerprint: ds.fingerprint(),
        pool_order: order.iter().map(|&i| pairs[i].id.clone()).collect(),
        test_ids: split.test.iter().map(|&i| pairs[i].id.clone()).collect(),
        cells,
    })
}

/// How to rank cells in [`best_cell`].
#[derive(Clone, Debug, PartialEq)]
pub enum BestBy {
    F1,
    Roi(CostParams),
}

/// Options for [`SweepResult::to_csv`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvOptions {
    /// Adds the wall-clock `train_seconds` column. Off by default because
    /// timings differ between runs and would break byte-stable output.
    pub include_timing: bool,
    /// Written as a leading `# manifest_sha256: ...` comment line.
    pub manifest_sha256: Option<String>,
}

impl SweepResult {
    pub fn cell(&self, family: Family, fraction: f64) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.family == family && c.fraction == fraction)
    }

    pub fn families(&self) -> Vec<Family> {
        self.config.families.iter().map(|s| s.family()).collect()
    }

    /// Ids the cell at `fraction` was trained on.
    pub fn training_ids(&self, fraction: f64) -> Option<&[String]> {
        self.cells
            .iter()
            .find(|c| c.fraction == fraction)
            .map(|c| &self.pool_order[..c.n_train_used])
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(SweepCell::is_ok)
    }

    pub fn to_csv(&self, opts: &CsvOptions) -> String {
        let mut out = String::new();
        if let Some(h) = &opts.manifest_sha256 {
            let _ = writeln!(out, "# manifest_sha256: {h}");
        }
        let mut header = vec![
            "family",
            "fraction",
            "n_train_used",
            "tp",
            "fp",
            "tn",
            "fn",
            "f1",
            "precision",
            "recall",
            "accuracy",
        ];
        if opts.include_timing {
            header.push("train_seconds");
        }
        header.push("error");
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header).expect("in-memory write");
        for c in &self.cells {
            let mut row = vec![c.family.to_string(), c.fraction.to_string(), c.n_train_used.to_string()];
            match (&c.confusion, &c.metrics) {
                (Some(cm), Some(m)) => {
                    row.extend([cm.tp, cm.fp, cm.tn, cm.fn_].map(|v| v.to_string()));
                    row.extend([m.f1, m.precision, m.recall, m.accuracy].map(|v| v.to_string()));
                }
                _ => row.extend(std::iter::repeat_n(String::new(), 8)),
            }
            if opts.include_timing {
                row.push(c.train_seconds.to_string());
            }
            row.push(c.error.as_ref().map(|e| e.code.clone()).unwrap_or_default());
            w.write_record(&row).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"));
        out
    }
}

fn score(cell: &SweepCell, by: &BestBy) -> Option<f64> {
    let cm = cell.confusion.as_ref()?;
    match by {
        BestBy::F1 => cell.metrics.map(|m| m.f1),
        BestBy::Roi(p) => {
            let cost = compute_cost(cell.fraction, p).ok()?;
            compute_roi(compute_benefit(cm, p), cost).ok()
        }
    }
}

/// Highest-scoring cell. Ties go to the smaller fraction, then to the
/// earlier family in [`Family::ALL`] order.
pub fn best_cell<'a>(result: &'a SweepResult, by: &BestBy) -> Result<&'a SweepCell, SweepError> {
    result
        .cells
        .iter()
        .filter_map(|c| score(c, by).map(|s| (c, s)))
        .min_by(|(a, sa), (b, sb)| {
            sb.total_cmp(sa)
                .then(a.fraction.total_cmp(&b.fraction))
                .then(a.family.cmp(&b.family))
        })
        .map(|(c, _)| c)
        .ok_or(SweepError::AllCellsErrored)
}
