use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{DatasetError, Label, LabeledPairDataset};
use crate::util::rng_for;

const SPLIT_STREAM: u64 = 1;
const ORDER_STREAM: u64 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: 0,
            stratified: true,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(DatasetError::InvalidSplit(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

/// Row indices of a partition, each list ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn class_indices(labels: &[Label]) -> [Vec<usize>; 2] {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        if l.is_positive() {
            pos.push(i);
        } else {
            neg.push(i);
        }
    }
    [pos, neg]
}

/// Largest-remainder apportionment of `total` over `sizes`, ties to the
/// earlier class.
fn apportion(total: usize, sizes: &[usize]) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    let mut quotas: Vec<usize> = sizes.iter().map(|&s| total * s / n).collect();
    let mut remainders: Vec<(usize, usize)> = sizes.iter().enumerate().map(|(i, &s)| (total * s % n, i)).collect();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut left = total - quotas.iter().sum::<usize>();
    for (_, i) in remainders {
        if left == 0 {
            break;
        }
        quotas[i] += 1;
        left -= 1;
    }
    quotas
}

/// Partitions row indices into train and test.
///
/// The test set holds `round(test_fraction * n)` rows. Under stratification
/// each class contributes its proportional share (largest remainder), clamped
/// so every class keeps at least one row on each side.
pub fn split_indices(labels: &[Label], spec: &SplitSpec) -> Result<SplitIndices, DatasetError> {
    spec.validate()?;
    let n = labels.len();
    if n < 2 {
        return Err(DatasetError::TooSmall(format!("{n} rows cannot be split")));
    }
    let n_test = ((spec.test_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut rng = rng_for(spec.seed, SPLIT_STREAM);
    let mut test = Vec::with_capacity(n_test);
    let mut train = Vec::with_capacity(n - n_test);

    if spec.stratified {
        let mut classes = class_indices(labels);
        for (c, members) in classes.iter().enumerate() {
            if members.len() < 2 {
                let label = if c == 0 { Label::Dependent } else { Label::Independent };
                return Err(DatasetError::TooSmall(format!(
                    "class {label} has {} rows; stratified split needs at least 2",
                    members.len()
                )));
            }
        }
        let sizes: Vec<usize> = classes.iter().map(Vec::len).collect();
        let quotas = apportion(n_test, &sizes);
        for (members, quota) in classes.iter_mut().zip(quotas) {
            let quota = quota.clamp(1, members.len() - 1);
            members.shuffle(&mut rng);
            test.extend_from_slice(&members[..quota]);
            train.extend_from_slice(&members[quota..]);
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        test.extend_from_slice(&all[..n_test]);
        train.extend_from_slice(&all[n_test..]);
    }
    test.sort_unstable();
    train.sort_unstable();
    Ok(SplitIndices { train, test })
}

/// Splits a dataset into `(train_pool, test_set)`.
pub fn split(
    ds: &LabeledPairDataset,
    spec: &SplitSpec,
) -> Result<(LabeledPairDataset, LabeledPairDataset), DatasetError> {
    let idx = split_indices(&ds.labels(), spec)?;
    Ok((
        ds.subset(format!("{}/train", ds.name()), &idx.train)?,
        ds.subset(format!("{}/test", ds.name()), &idx.test)?,
    ))
}

/// A seed-shuffled ordering of `indices` in which every prefix is as close to
/// the overall class ratio as integer counts allow. Taking prefixes of this
/// ordering yields nested, stratified subsets.
pub fn stratified_order(labels: &[Label], indices: &[usize], seed: u64) -> Vec<usize> {
    let mut rng = rng_for(seed, ORDER_STREAM);
    let mut pos: Vec<usize> = indices.iter().copied().filter(|&i| labels[i].is_positive()).collect();
    let mut neg: Vec<usize> = indices.iter().copied().filter(|&i| !labels[i].is_positive()).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let total = pos.len() + neg.len();
    let mut out = Vec::with_capacity(total);
    let (mut taken_pos, mut taken_neg) = (0usize, 0usize);
    for k in 1..=total {
        // Positive rows owed to a prefix of length k: round(k * P / total).
        let owed = (2 * k * pos.len() + total) / (2 * total);
        if taken_pos < owed.min(pos.len()) || taken_neg == neg.len() {
            out.push(pos[taken_pos]);
            taken_pos += 1;
        } else {
            out.push(neg[taken_neg]);
            taken_neg += 1;
        }
    }
    out
}
