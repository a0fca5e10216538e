use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, MaxFeatures, TreeParams, TREE_STREAM};
use super::TrainingSet;
use crate::textpipe::DocumentVector;
use crate::util::rng_for;

const BOOTSTRAP_STREAM: u64 = 500_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

impl ForestParams {
    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            max_features: self.max_features,
        }
    }
}

/// Bagged trees; the forest probability is the mean leaf probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    /// Tree `t` draws its features from stream `TREE_STREAM + t`, so a
    /// one-tree forest without bootstrap grows exactly the decision tree.
    /// Trees are independent and built in parallel; the result does not
    /// depend on scheduling.
    pub(crate) fn fit(data: &TrainingSet<'_>, p: &ForestParams, seed: u64) -> Self {
        let n = data.x.len();
        let tp = p.tree_params();
        let trees = (0..p.n_trees as u64)
            .into_par_iter()
            .map(|t| {
                let rows: Vec<usize> = if p.bootstrap {
                    let mut rng = rng_for(seed, BOOTSTRAP_STREAM + t);
                    let mut rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                    rows.sort_unstable();
                    rows
                } else {
                    (0..n).collect()
                };
                let mut rng = rng_for(seed, TREE_STREAM + t);
                DecisionTree::grow(data.x, &data.y, rows, data.dim, &tp, &mut rng)
            })
            .collect();
        Self { trees }
    }

    pub fn positive_probability(&self, x: &DocumentVector) -> f64 {
        self.trees.iter().map(|t| t.positive_probability(x)).sum::<f64>() / self.trees.len() as f64
    }
}
