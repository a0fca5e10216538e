use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelError, TrainingSet};
use crate::textpipe::DocumentVector;
use crate::util::rng_for;

/// RNG stream of the first tree; forests use `TREE_STREAM + t` for tree `t`.
pub(crate) const TREE_STREAM: u64 = 1_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    /// `floor(sqrt(V))`, at least 1.
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, dim: usize) -> usize {
        match self {
            MaxFeatures::All => dim,
            MaxFeatures::Sqrt => ((dim as f64).sqrt() as usize).max(1),
            MaxFeatures::Count(k) => k.clamp(1, dim.max(1)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeParams {
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
            max_features: MaxFeatures::All,
        }
    }
}

impl TreeParams {
    pub(crate) fn validate(&self) -> Result<(), ModelError> {
        if self.min_samples_split < 2 {
            return Err(ModelError::InvalidHyperparams(
                "min_samples_split must be at least 2".into(),
            ));
        }
        if self.max_depth == Some(0) {
            return Err(ModelError::InvalidHyperparams("max_depth must be at least 1".into()));
        }
        if self.max_features == MaxFeatures::Count(0) {
            return Err(ModelError::InvalidHyperparams("max_features must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        positive: u32,
        negative: u32,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

/// CART tree with Gini impurity, stored as an arena rooted at index 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

struct BestSplit {
    score: f64,
    feature: u32,
    threshold: f64,
}

/// Values of one feature grouped by distinct value: `(value, positives, negatives)`.
fn feature_groups(entries: &[(u32, f64, bool)], node_pos: u32, node_neg: u32) -> Vec<(f64, u32, u32)> {
    let mut groups: Vec<(f64, u32, u32)> = Vec::new();
    let (mut nz_pos, mut nz_neg) = (0u32, 0u32);
    for &(_, v, pos) in entries {
        if pos {
            nz_pos += 1;
        } else {
            nz_neg += 1;
        }
        match groups.last_mut() {
            Some(g) if g.0 == v => {
                if pos {
                    g.1 += 1
                } else {
                    g.2 += 1
                }
            }
            _ => groups.push((v, pos as u32, (!pos) as u32)),
        }
    }
    let (zp, zn) = (node_pos - nz_pos, node_neg - nz_neg);
    if zp + zn > 0 {
        let at = groups.partition_point(|g| g.0 < 0.0);
        groups.insert(at, (0.0, zp, zn));
    }
    groups
}

/// Larger is better; equals `n - n * weighted_gini`.
fn split_score(lp: u32, ln: u32, rp: u32, rn: u32) -> f64 {
    let side = |p: u32, n: u32| {
        let (p, n) = (p as f64, n as f64);
        (p * p + n * n) / (p + n)
    };
    side(lp, ln) + side(rp, rn)
}

fn best_split_for_feature(
    feature: u32,
    entries: &[(u32, f64, bool)],
    node_pos: u32,
    node_neg: u32,
    best: &mut Option<BestSplit>,
) {
    let groups = feature_groups(entries, node_pos, node_neg);
    let (mut lp, mut ln) = (0u32, 0u32);
    for w in groups.windows(2) {
        lp += w[0].1;
        ln += w[0].2;
        let score = split_score(lp, ln, node_pos - lp, node_neg - ln);
        if best.as_ref().is_none_or(|b| score > b.score) {
            let (a, b) = (w[0].0, w[1].0);
            let mut threshold = a + (b - a) / 2.0;
            if threshold >= b {
                threshold = a;
            }
            *best = Some(BestSplit {
                score,
                feature,
                threshold,
            });
        }
    }
}

impl DecisionTree {
    pub(crate) fn fit(data: &TrainingSet<'_>, p: &TreeParams, seed: u64) -> Self {
        let rows: Vec<usize> = (0..data.x.len()).collect();
        let mut rng = rng_for(seed, TREE_STREAM);
        Self::grow(data.x, &data.y, rows, data.dim, p, &mut rng)
    }

    /// Grows a tree on `rows` (which may repeat, as in a bootstrap sample).
    pub(crate) fn grow(
        x: &[DocumentVector],
        y: &[bool],
        rows: Vec<usize>,
        dim: usize,
        p: &TreeParams,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let k = p.max_features.resolve(dim);
        let mut nodes = vec![Node::Leaf {
            positive: 0,
            negative: 0,
        }];
        let mut stack = vec![(0usize, rows, 0usize)];
        let mut picked: Vec<bool> = Vec::new();

        while let Some((id, rows, depth)) = stack.pop() {
            let pos = rows.iter().filter(|&&r| y[r]).count() as u32;
            let neg = rows.len() as u32 - pos;
            nodes[id] = Node::Leaf {
                positive: pos,
                negative: neg,
            };
            let stop =
                pos == 0 || neg == 0 || rows.len() < p.min_samples_split || p.max_depth.is_some_and(|m| depth >= m);
            if stop {
                continue;
            }

            let gather = |keep: &dyn Fn(u32) -> bool| {
                let mut entries: Vec<(u32, f64, bool)> = rows
                    .iter()
                    .flat_map(|&r| x[r].entries().iter().map(move |&(j, v)| (j, v, y[r])))
                    .filter(|e| keep(e.0))
                    .collect();
                entries.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
                entries
            };
            let search = |entries: &[(u32, f64, bool)], best: &mut Option<BestSplit>| {
                for run in entries.chunk_by(|a, b| a.0 == b.0) {
                    best_split_for_feature(run[0].0, run, pos, neg, best);
                }
            };
            let mut best = None;
            if k < dim {
                picked.clear();
                picked.resize(dim, false);
                for f in index::sample(rng, dim, k) {
                    picked[f] = true;
                }
                search(&gather(&|f| picked[f as usize]), &mut best);
            }
            if best.is_none() {
                // Either every feature is allowed or the sampled ones cannot split.
                search(&gather(&|_| true), &mut best);
            }
            let Some(best) = best else { continue };

            let (left, right): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&r| x[r].get(best.feature as usize) <= best.threshold);
            let l = nodes.len();
            nodes.push(Node::Leaf {
                positive: 0,
                negative: 0,
            });
            nodes.push(Node::Leaf {
                positive: 0,
                negative: 0,
            });
            nodes[id] = Node::Split {
                feature: best.feature,
                threshold: best.threshold,
                left: l as u32,
                right: l as u32 + 1,
            };
            stack.push((l + 1, right, depth + 1));
            stack.push((l, left, depth + 1));
        }
        DecisionTree { nodes }
    }

    pub fn positive_probability(&self, x: &DocumentVector) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { positive, negative } => {
                    return *positive as f64 / (*positive + *negative) as f64;
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x.get(*feature as usize) <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        let mut deepest = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((at, d)) = stack.pop() {
            deepest = deepest.max(d);
            if let Node::Split { left, right, .. } = self.nodes[at] {
                stack.push((left as usize, d + 1));
                stack.push((right as usize, d + 1));
            }
        }
        deepest
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit, ClassifierSpec, FittedModel, Hyperparams};
    use crate::Label;
    use proptest::prelude::*;

    fn tree_of(x: &[DocumentVector], y: &[Label], p: TreeParams) -> DecisionTree {
        let m = fit(&ClassifierSpec::new(Hyperparams::DecisionTree(p), 0), x, y).unwrap();
        let FittedModel::DecisionTree(t) = m.model else {
            unreachable!()
        };
        t
    }

    #[test]
    fn picks_lowest_feature_then_lowest_threshold_on_ties() {
        // Features 0 and 1 separate equally well; feature 0 must win.
        let x = vec![
            DocumentVector::from_dense(&[1.0, 1.0]),
            DocumentVector::from_dense(&[0.0, 0.0]),
        ];
        let y = vec![Label::Dependent, Label::Independent];
        let t = tree_of(&x, &y, TreeParams::default());
        assert_eq!(
            t.nodes[0],
            Node::Split {
                feature: 0,
                threshold: 0.5,
                left: 1,
                right: 2
            }
        );
    }

    #[test]
    fn gini_prefers_the_cleaner_cut() {
        // Feature 1 separates perfectly; feature 0 leaves a mixed side.
        let x: Vec<DocumentVector> = [[0.1, 0.0], [0.2, 0.0], [0.3, 1.0], [0.4, 1.0], [0.5, 1.0]]
            .iter()
            .map(|r| DocumentVector::from_dense(r))
            .collect();
        let y = vec![
            Label::Independent,
            Label::Independent,
            Label::Dependent,
            Label::Dependent,
            Label::Dependent,
        ];
        let t = tree_of(&x, &y, TreeParams::default());
        // Cutting feature 0 at 0.25 is just as clean and has the lower index.
        assert!(matches!(t.nodes[0], Node::Split { feature: 0, threshold, .. } if (threshold - 0.25).abs() < 1e-12));
        assert_eq!(t.n_leaves(), 2);
    }

    #[test]
    fn depth_limit_is_respected() {
        let x: Vec<DocumentVector> = (0..16).map(|i| DocumentVector::from_dense(&[i as f64 + 1.0])).collect();
        let y: Vec<Label> = (0..16).map(|i| Label::from_positive(i % 2 == 0)).collect();
        let t = tree_of(
            &x,
            &y,
            TreeParams {
                max_depth: Some(2),
                ..Default::default()
            },
        );
        assert!(t.depth() <= 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        /// Unbounded depth memorizes any conflict-free training set.
        #[test]
        fn unbounded_tree_fits_training_data(
            rows in prop::collection::btree_map(prop::collection::vec(0u8..4, 4), any::<bool>(), 2..40),
            sqrt in any::<bool>(),
        ) {
            let x: Vec<DocumentVector> = rows
                .keys()
                .map(|r| DocumentVector::from_dense(&r.iter().map(|&v| v as f64).collect::<Vec<_>>()))
                .collect();
            let y: Vec<Label> = rows.values().map(|&p| Label::from_positive(p)).collect();
            prop_assume!(y.iter().any(|l| l.is_positive()) && y.iter().any(|l| !l.is_positive()));
            let p = TreeParams {
                max_features: if sqrt { MaxFeatures::Sqrt } else { MaxFeatures::All },
                ..Default::default()
            };
            let m = fit(&ClassifierSpec::new(Hyperparams::DecisionTree(p), 9), &x, &y).unwrap();
            // All-zero rows take the majority fallback at predict time.
            for (v, l) in x.iter().zip(&y).filter(|(v, _)| !v.is_zero()) {
                prop_assert_eq!(m.predict(v).unwrap().label, *l);
            }
        }
    }
}
