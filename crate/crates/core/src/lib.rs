//! Return-on-investment workbench for classifier training decisions.
//!
//! The crate trains text classifiers on growing shares of a labeled
//! requirement-pair corpus, records their confusion counts, and prices those
//! counts with a cost/benefit model so that the point where more labeled data
//! stops paying for itself becomes visible.
//!
//! Module map:
//!
//! * [`dataset`]: CSV ingestion, summaries, stratified splits, synthetic corpora.
//! * [`textpipe`]: normalization, suffix lemmatization, TF-IDF.
//! * [`models`]: five binary classifiers behind one contract.
//! * [`eval`]: confusion matrices, F1/precision/recall, stratified k-fold CV.
//! * [`sweep`]: the training-fraction grid.
//! * [`roi`]: cost, benefit, ROI, break-even and sensitivity.
//! * [`active`]: pool-based active learning sessions.
//! * [`store`]: file-backed persistence with atomic writes.

pub mod active;
pub mod dataset;
pub mod eval;
pub mod models;
pub mod roi;
pub mod store;
pub mod sweep;
pub mod textpipe;

mod util;

pub use dataset::{Label, LabeledPair, LabeledPairDataset};
pub use eval::{ConfusionMatrix, MetricBundle};
pub use models::{ClassifierSpec, Family, Prediction, TrainedClassifier};
pub use roi::{CostBasis, CostParams, RoiPoint};
pub use sweep::{SweepCell, SweepConfig, SweepResult};
pub use textpipe::{DocumentVector, PipelineConfig, VectorizerModel};
