use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{DatasetError, LabelVocab, LabeledPair, LabeledPairDataset};

/// Which CSV columns feed which fields. Names must match header cells exactly
/// (surrounding whitespace ignored).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMap {
    /// Row id column; when absent the 1-based data row number is used.
    #[serde(default)]
    pub id: Option<String>,
    pub text_a: String,
    pub text_b: String,
    pub label: String,
    #[serde(default)]
    pub vocab: LabelVocab,
}

impl ColumnMap {
    pub fn new(text_a: impl Into<String>, text_b: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            id: None,
            text_a: text_a.into(),
            text_b: text_b.into(),
            label: label.into(),
            vocab: LabelVocab::default(),
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn with_vocab(mut self, vocab: LabelVocab) -> Self {
        self.vocab = vocab;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    EmptyText { field: String },
    UnknownLabel { value: String },
    DuplicateId { id: String },
    MissingField { field: String },
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::EmptyText { field } => write!(f, "empty {field}"),
            RejectReason::UnknownLabel { value } => write!(f, "unknown label {value:?}"),
            RejectReason::DuplicateId { id } => write!(f, "duplicate id {id:?}"),
            RejectReason::MissingField { field } => write!(f, "row too short for {field}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    /// 1-based data row (the header is row 0).
    pub row: usize,
    #[serde(flatten)]
    pub reason: RejectReason,
}

/// Accounting for one ingestion: `accepted + rejected.len() == raw_rows`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub raw_rows: usize,
    pub accepted: usize,
    pub rejected: Vec<Rejection>,
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "rows: {} accepted: {} rejected: {}",
            self.raw_rows,
            self.accepted,
            self.rejected.len()
        )?;
        for r in &self.rejected {
            writeln!(f, "row {}: {}", r.row, r.reason)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Ingested {
    pub dataset: LabeledPairDataset,
    pub report: IngestReport,
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize, DatasetError> {
    let wanted = name.trim();
    headers
        .iter()
        .position(|h| h.trim().trim_start_matches('\u{feff}') == wanted)
        .ok_or_else(|| DatasetError::MissingColumn(wanted.to_string()))
}

/// Parses a comma-separated, double-quote escaped CSV with a header row.
///
/// Rows with empty text, an unknown label, a repeated id or too few fields
/// are rejected and reported rather than failing the whole file. More than
/// two distinct label values fails with [`DatasetError::LabelCardinality`].
pub fn ingest_csv<R: Read>(input: R, map: &ColumnMap, name: impl Into<String>) -> Result<Ingested, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    let a_col = column_index(&headers, &map.text_a)?;
    let b_col = column_index(&headers, &map.text_b)?;
    let label_col = column_index(&headers, &map.label)?;
    let id_col = map.id.as_deref().map(|c| column_index(&headers, c)).transpose()?;

    let mut report = IngestReport::default();
    let mut pairs = Vec::new();
    let mut seen_ids = HashSet::new();
    let mut distinct_labels = BTreeSet::new();
    let mut unknown_labels = BTreeSet::new();

    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        report.raw_rows += 1;
        let field = |col: usize, field_name: &str| {
            record.get(col).ok_or_else(|| RejectReason::MissingField {
                field: field_name.to_string(),
            })
        };
        let parsed = (|| {
            let label_raw = field(label_col, &map.label)?.trim();
            if !label_raw.is_empty() {
                distinct_labels.insert(label_raw.to_uppercase());
            }
            let text_a = field(a_col, &map.text_a)?;
            let text_b = field(b_col, &map.text_b)?;
            let label = match map.vocab.parse(label_raw) {
                Some(l) => l,
                None => {
                    if !label_raw.is_empty() {
                        unknown_labels.insert(label_raw.to_string());
                    }
                    return Err(RejectReason::UnknownLabel {
                        value: label_raw.to_string(),
                    });
                }
            };
            for (text, name) in [(text_a, &map.text_a), (text_b, &map.text_b)] {
                if text.trim().is_empty() {
                    return Err(RejectReason::EmptyText { field: name.clone() });
                }
            }
            let id = match id_col {
                Some(c) => field(c, map.id.as_deref().unwrap_or("id"))?.trim().to_string(),
                None => row.to_string(),
            };
            if id.is_empty() {
                return Err(RejectReason::MissingField {
                    field: map.id.clone().unwrap_or_default(),
                });
            }
            if seen_ids.contains(&id) {
                return Err(RejectReason::DuplicateId { id });
            }
            Ok(LabeledPair {
                id,
                text_a: text_a.to_string(),
                text_b: text_b.to_string(),
                label,
            })
        })();
        match parsed {
            Ok(pair) => {
                seen_ids.insert(pair.id.clone());
                pairs.push(pair);
            }
            Err(reason) => report.rejected.push(Rejection { row, reason }),
        }
    }

    if distinct_labels.len() > 2 {
        return Err(DatasetError::LabelCardinality(unknown_labels.into_iter().collect()));
    }
    report.accepted = pairs.len();
    if pairs.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    let dataset = LabeledPairDataset::new(name, pairs)?;
    Ok(Ingested { dataset, report })
}
