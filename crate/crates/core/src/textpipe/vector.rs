use serde::{Deserialize, Serialize};

/// Sparse feature vector: `(column, weight)` pairs sorted by column, no
/// explicit zeros.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DocumentVector {
    dim: usize,
    entries: Vec<(u32, f64)>,
}

impl DocumentVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// Builds from unordered entries; duplicate columns are summed and zeros
    /// dropped.
    ///
    /// # Panics
    /// If a column is `>= dim`.
    pub fn new(dim: usize, mut entries: Vec<(u32, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (i, w) in entries {
            assert!((i as usize) < dim, "column {i} out of range for dim {dim}");
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += w,
                _ => merged.push((i, w)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        Self { dim, entries: merged }
    }

    pub(crate) fn from_sorted(dim: usize, entries: Vec<(u32, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        Self { dim, entries }
    }

    /// Dense input; zeros are skipped.
    pub fn from_dense(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i as u32, *v))
            .collect();
        Self {
            dim: values.len(),
            entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, col: usize) -> f64 {
        self.entries
            .binary_search_by_key(&(col as u32), |e| e.0)
            .map(|k| self.entries[k].1)
            .unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * dense[i as usize]).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, w) in &self.entries {
            out[i as usize] = w;
        }
        out
    }

    pub fn l2_normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            for e in &mut self.entries {
                e.1 /= n;
            }
        }
        self
    }

    /// `self` followed by `other`, dimension `self.dim + other.dim`.
    pub fn concat(&self, other: &DocumentVector) -> DocumentVector {
        let offset = self.dim as u32;
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().map(|&(i, w)| (i + offset, w)));
        DocumentVector {
            dim: self.dim + other.dim,
            entries,
        }
    }
}
