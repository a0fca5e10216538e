use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Label, LabeledPairDataset};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub dependent: usize,
    pub independent: usize,
}

impl ClassCounts {
    pub fn of(labels: impl IntoIterator<Item = Label>) -> Self {
        let mut c = ClassCounts::default();
        for l in labels {
            match l {
                Label::Dependent => c.dependent += 1,
                Label::Independent => c.independent += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.dependent + self.independent
    }

    pub fn get(&self, label: Label) -> usize {
        match label {
            Label::Dependent => self.dependent,
            Label::Independent => self.independent,
        }
    }
}

/// Nearest-rank percentiles of whitespace/punctuation token counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenPercentiles {
    pub p25: usize,
    pub p50: usize,
    pub p75: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub class_counts: ClassCounts,
    /// Share of the positive (DEPENDENT) class.
    pub class_ratio: f64,
    pub tokens_a: TokenPercentiles,
    pub tokens_b: TokenPercentiles,
    /// Distinct lowercase alphanumeric tokens across both text fields.
    pub vocabulary_size: usize,
}

fn raw_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

fn nearest_rank(sorted: &[usize], pct: usize) -> usize {
    if sorted.is_empty() {
        return 0;
    }
    let rank = (pct * sorted.len()).div_ceil(100).max(1);
    sorted[rank - 1]
}

fn percentiles(mut counts: Vec<usize>) -> TokenPercentiles {
    counts.sort_unstable();
    TokenPercentiles {
        p25: nearest_rank(&counts, 25),
        p50: nearest_rank(&counts, 50),
        p75: nearest_rank(&counts, 75),
    }
}

pub fn summarize(ds: &LabeledPairDataset) -> DatasetSummary {
    let class_counts = ClassCounts::of(ds.pairs().iter().map(|p| p.label));
    let mut vocab = BTreeSet::new();
    let mut len_a = Vec::with_capacity(ds.n());
    let mut len_b = Vec::with_capacity(ds.n());
    for p in ds.pairs() {
        let a: Vec<String> = raw_tokens(&p.text_a).collect();
        let b: Vec<String> = raw_tokens(&p.text_b).collect();
        len_a.push(a.len());
        len_b.push(b.len());
        vocab.extend(a);
        vocab.extend(b);
    }
    DatasetSummary {
        n: ds.n(),
        class_counts,
        class_ratio: class_counts.dependent as f64 / ds.n() as f64,
        tokens_a: percentiles(len_a),
        tokens_b: percentiles(len_b),
        vocabulary_size: vocab.len(),
    }
}
