//! Labeled requirement-pair datasets.
//!
//! A dataset is an ordered, immutable list of [`LabeledPair`]s. Rows come in
//! through [`ingest_csv`] (any UTF-8 CSV with a header, columns chosen by
//! name) or [`generate_synthetic`], and leave as train/test partitions via
//! [`split`].

mod ingest;
mod split;
mod summary;
mod synthetic;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ingest::{ingest_csv, ColumnMap, IngestReport, Ingested, RejectReason, Rejection};
pub use split::{split, split_indices, stratified_order, SplitIndices, SplitSpec};
pub use summary::{summarize, ClassCounts, DatasetSummary, TokenPercentiles};
pub use synthetic::{
    generate as generate_synthetic_with, generate_synthetic, PlantedVocabulary, SyntheticCorpus, SyntheticSpec,
};

/// Binary dependency label. [`Label::Dependent`] is the positive class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Label {
    Dependent,
    Independent,
}

impl Label {
    pub const POSITIVE: Label = Label::Dependent;

    pub fn is_positive(self) -> bool {
        self == Label::POSITIVE
    }

    pub fn other(self) -> Label {
        match self {
            Label::Dependent => Label::Independent,
            Label::Independent => Label::Dependent,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Dependent => "DEPENDENT",
            Label::Independent => "INDEPENDENT",
        }
    }

    pub fn from_positive(positive: bool) -> Label {
        if positive {
            Label::Dependent
        } else {
            Label::Independent
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Label {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LabelVocab::default()
            .parse(s)
            .ok_or_else(|| DatasetError::LabelCardinality(vec![s.to_string()]))
    }
}

/// Maps two free-form label strings onto the positive/negative classes.
///
/// Matching trims whitespace and ignores ASCII case.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelVocab {
    pub positive: String,
    pub negative: String,
}

impl Default for LabelVocab {
    fn default() -> Self {
        Self {
            positive: Label::Dependent.as_str().to_string(),
            negative: Label::Independent.as_str().to_string(),
        }
    }
}

impl LabelVocab {
    pub fn parse(&self, raw: &str) -> Option<Label> {
        let raw = raw.trim();
        if raw.eq_ignore_ascii_case(self.positive.trim()) {
            Some(Label::Dependent)
        } else if raw.eq_ignore_ascii_case(self.negative.trim()) {
            Some(Label::Independent)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub id: String,
    pub text_a: String,
    pub text_b: String,
    pub label: Label,
}

/// An immutable, ordered collection of labeled pairs with unique ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPairDataset {
    name: String,
    pairs: Vec<LabeledPair>,
}

impl LabeledPairDataset {
    pub fn new(name: impl Into<String>, pairs: Vec<LabeledPair>) -> Result<Self, DatasetError> {
        let mut seen = HashSet::with_capacity(pairs.len());
        for p in &pairs {
            if p.text_a.trim().is_empty() || p.text_b.trim().is_empty() {
                return Err(DatasetError::EmptyText(p.id.clone()));
            }
            if !seen.insert(p.id.as_str()) {
                return Err(DatasetError::DuplicateId(p.id.clone()));
            }
        }
        if pairs.is_empty() {
            return Err(DatasetError::EmptyDataset);
        }
        Ok(Self {
            name: name.into(),
            pairs,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn pairs(&self) -> &[LabeledPair] {
        &self.pairs
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.pairs.iter().map(|p| p.label).collect()
    }

    /// New dataset holding the rows at `indices`, in that order.
    pub fn subset(&self, name: impl Into<String>, indices: &[usize]) -> Result<Self, DatasetError> {
        let pairs = indices.iter().map(|&i| self.pairs[i].clone()).collect();
        Self::new(name, pairs)
    }

    /// Canonical CSV encoding (`id,text_a,text_b,label`). The content hash is
    /// computed over these bytes.
    pub fn to_canonical_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(["id", "text_a", "text_b", "label"])
            .expect("in-memory write");
        for p in &self.pairs {
            w.write_record([p.id.as_str(), &p.text_a, &p.text_b, p.label.as_str()])
                .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn from_canonical_csv(name: impl Into<String>, bytes: &[u8]) -> Result<Self, DatasetError> {
        let map = ColumnMap::new("text_a", "text_b", "label").with_id("id");
        let ingested = ingest_csv(bytes, &map, name)?;
        if !ingested.report.rejected.is_empty() {
            return Err(DatasetError::Corrupt(format!(
                "{} rows rejected from canonical encoding",
                ingested.report.rejected.len()
            )));
        }
        Ok(ingested.dataset)
    }

    /// SHA-256 of the canonical CSV, hex encoded.
    pub fn fingerprint(&self) -> String {
        crate::util::sha256_hex(&self.to_canonical_csv())
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("column `{0}` not present in the CSV header")]
    MissingColumn(String),
    #[error("dataset has no valid rows")]
    EmptyDataset,
    #[error("label column is not binary; unexpected values: {}", .0.join(", "))]
    LabelCardinality(Vec<String>),
    #[error("duplicate row id `{0}`")]
    DuplicateId(String),
    #[error("row `{0}` has an empty text field")]
    EmptyText(String),
    #[error("too few rows: {0}")]
    TooSmall(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("invalid synthetic corpus settings: {0}")]
    InvalidSynthetic(String),
    #[error("corrupt dataset encoding: {0}")]
    Corrupt(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl DatasetError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            DatasetError::MissingColumn(_) => "MISSING_COLUMN",
            DatasetError::EmptyDataset => "EMPTY_DATASET",
            DatasetError::LabelCardinality(_) => "LABEL_CARDINALITY",
            DatasetError::DuplicateId(_) => "DUPLICATE_ID",
            DatasetError::EmptyText(_) => "EMPTY_TEXT",
            DatasetError::TooSmall(_) => "TOO_SMALL",
            DatasetError::InvalidSplit(_) => "INVALID_SPLIT",
            DatasetError::InvalidSynthetic(_) => "INVALID_SYNTHETIC",
            DatasetError::Corrupt(_) => "CORRUPT_DATASET",
            DatasetError::Csv(_) => "INVALID_CSV",
        }
    }
}
