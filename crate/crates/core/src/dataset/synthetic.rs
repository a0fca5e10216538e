//! Synthetic requirement-pair corpora with a known Bayes rate.
//!
//! Every row carries filler words drawn uniformly from a shared vocabulary.
//! With probability `signal_strength` one keyword from the row's own class
//! list is inserted; otherwise the row carries no keyword at all. Keyword
//! lists are disjoint, so a row with a keyword is classified perfectly and a
//! row without one is a coin weighted by the class prior:
//!
//! ```text
//! bayes_accuracy = s + (1 - s) * max(pi, 1 - pi)
//! ```

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, Label, LabeledPair, LabeledPairDataset};
use crate::textpipe::builtin_stopwords;
use crate::util::rng_for;

const ROW_STREAM: u64 = 10;
const VOCAB_SEED: u64 = 0x0a70_5eed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n: usize,
    /// Share of DEPENDENT rows, in (0, 1).
    pub class_ratio: f64,
    /// Probability that a row carries a class keyword, in (0, 1].
    pub signal_strength: f64,
    pub seed: u64,
    #[serde(default = "default_keywords")]
    pub keywords_per_class: usize,
    #[serde(default = "default_filler")]
    pub filler_vocabulary: usize,
    #[serde(default = "default_min_tokens")]
    pub min_tokens: usize,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: usize,
}

fn default_keywords() -> usize {
    12
}
fn default_filler() -> usize {
    240
}
fn default_min_tokens() -> usize {
    6
}
fn default_max_tokens() -> usize {
    12
}

impl SyntheticSpec {
    pub fn new(n: usize, class_ratio: f64, signal_strength: f64, seed: u64) -> Self {
        Self {
            n,
            class_ratio,
            signal_strength,
            seed,
            keywords_per_class: default_keywords(),
            filler_vocabulary: default_filler(),
            min_tokens: default_min_tokens(),
            max_tokens: default_max_tokens(),
        }
    }

    fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::InvalidSynthetic(m));
        if self.n < 10 {
            return bad(format!("n must be at least 10, got {}", self.n));
        }
        if !(self.class_ratio > 0.0 && self.class_ratio < 1.0) {
            return bad(format!("class_ratio must lie in (0, 1), got {}", self.class_ratio));
        }
        if !(self.signal_strength > 0.0 && self.signal_strength <= 1.0) {
            return bad(format!(
                "signal_strength must lie in (0, 1], got {}",
                self.signal_strength
            ));
        }
        if self.keywords_per_class == 0 || self.filler_vocabulary == 0 {
            return bad("keyword and filler vocabularies must be non-empty".into());
        }
        if self.min_tokens == 0 || self.min_tokens > self.max_tokens {
            return bad("need 1 <= min_tokens <= max_tokens".into());
        }
        Ok(())
    }

    /// Closed-form accuracy of the Bayes-optimal classifier for this spec.
    pub fn bayes_accuracy(&self) -> f64 {
        let prior = self.class_ratio.max(1.0 - self.class_ratio);
        self.signal_strength + (1.0 - self.signal_strength) * prior
    }
}

/// The word lists a generator planted, for oracles that need ground truth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedVocabulary {
    pub dependent_keywords: Vec<String>,
    pub independent_keywords: Vec<String>,
    pub filler: Vec<String>,
}

impl PlantedVocabulary {
    pub fn size(&self) -> usize {
        self.dependent_keywords.len() + self.independent_keywords.len() + self.filler.len()
    }

    /// Label implied by the first planted keyword found in `text`.
    pub fn keyword_label(&self, text: &str) -> Option<Label> {
        text.split_whitespace().find_map(|w| {
            if self.dependent_keywords.iter().any(|k| k == w) {
                Some(Label::Dependent)
            } else if self.independent_keywords.iter().any(|k| k == w) {
                Some(Label::Independent)
            } else {
                None
            }
        })
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub dataset: LabeledPairDataset,
    pub planted: PlantedVocabulary,
    pub spec: SyntheticSpec,
}

const ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "t", "v", "z", "br", "dr", "gl", "kr", "pl", "st", "tr",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];

/// Pronounceable three-syllable words ending in a vowel, so that suffix
/// lemmatization leaves them intact.
fn pseudo_words(count: usize) -> Vec<String> {
    let mut rng = rng_for(VOCAB_SEED, 0);
    let stop = builtin_stopwords();
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let w: String = (0..3)
            .map(|_| {
                format!(
                    "{}{}",
                    ONSETS[rng.gen_range(0..ONSETS.len())],
                    VOWELS[rng.gen_range(0..VOWELS.len())]
                )
            })
            .collect();
        if !stop.contains(w.as_str()) && seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn planted_vocabulary(spec: &SyntheticSpec) -> PlantedVocabulary {
    let k = spec.keywords_per_class;
    let mut words = pseudo_words(2 * k + spec.filler_vocabulary);
    let filler = words.split_off(2 * k);
    let independent_keywords = words.split_off(k);
    PlantedVocabulary {
        dependent_keywords: words,
        independent_keywords,
        filler,
    }
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticCorpus, DatasetError> {
    spec.validate()?;
    let planted = planted_vocabulary(spec);
    let mut rng = rng_for(spec.seed, ROW_STREAM);

    let n_pos = ((spec.class_ratio * spec.n as f64).round() as usize).clamp(1, spec.n - 1);
    let mut labels = vec![Label::Dependent; n_pos];
    labels.extend(std::iter::repeat_n(Label::Independent, spec.n - n_pos));
    labels.shuffle(&mut rng);

    let text = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<&str> {
        let len = rng.gen_range(spec.min_tokens..=spec.max_tokens);
        (0..len)
            .map(|_| planted.filler[rng.gen_range(0..planted.filler.len())].as_str())
            .collect()
    };

    let mut pairs = Vec::with_capacity(spec.n);
    for (i, &label) in labels.iter().enumerate() {
        let mut a = text(&mut rng);
        let mut b = text(&mut rng);
        if rng.gen_bool(spec.signal_strength) {
            let list = match label {
                Label::Dependent => &planted.dependent_keywords,
                Label::Independent => &planted.independent_keywords,
            };
            let kw = list[rng.gen_range(0..list.len())].as_str();
            let target = if rng.gen_bool(0.5) { &mut a } else { &mut b };
            let at = rng.gen_range(0..=target.len());
            target.insert(at, kw);
        }
        pairs.push(LabeledPair {
            id: format!("syn-{i:05}"),
            text_a: a.join(" "),
            text_b: b.join(" "),
            label,
        });
    }
    let name = format!(
        "synthetic-n{}-r{}-s{}-seed{}",
        spec.n, spec.class_ratio, spec.signal_strength, spec.seed
    );
    Ok(SyntheticCorpus {
        dataset: LabeledPairDataset::new(name, pairs)?,
        planted,
        spec: spec.clone(),
    })
}

/// Generates a corpus with default vocabulary sizes.
pub fn generate_synthetic(
    n: usize,
    class_ratio: f64,
    signal_strength: f64,
    seed: u64,
) -> Result<SyntheticCorpus, DatasetError> {
    generate(&SyntheticSpec::new(n, class_ratio, signal_strength, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::summarize;

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic(200, 0.5, 0.9, 4).unwrap();
        let b = generate_synthetic(200, 0.5, 0.9, 4).unwrap();
        let c = generate_synthetic(200, 0.5, 0.9, 5).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_ne!(a.dataset, c.dataset);
    }

    #[test]
    fn full_signal_is_separable() {
        let c = generate_synthetic(300, 0.4, 1.0, 1).unwrap();
        for p in c.dataset.pairs() {
            let joined = format!("{} {}", p.text_a, p.text_b);
            assert_eq!(c.planted.keyword_label(&joined), Some(p.label));
        }
    }

    #[test]
    fn rejects_bad_settings() {
        assert!(generate_synthetic(100, 0.5, 0.0, 1).is_err());
        assert!(generate_synthetic(9, 0.5, 0.5, 1).is_err());
        assert!(generate_synthetic(100, 1.0, 0.5, 1).is_err());
    }

    #[test]
    fn vocabulary_estimate_matches_planted() {
        let c = generate_synthetic(1000, 0.5, 0.9, 2).unwrap();
        let est = summarize(&c.dataset).vocabulary_size as f64;
        let planted = c.planted.size() as f64;
        assert!((est - planted).abs() <= 0.05 * planted, "{est} vs {planted}");
    }

    /// Keyword-then-majority rule against the closed-form Bayes rate.
    #[test]
    fn majority_keyword_accuracy_matches_bayes_rate() {
        for seed in 0..10 {
            let c = generate_synthetic(1000, 0.5, 0.9, seed).unwrap();
            let majority = Label::Dependent;
            let correct = c
                .dataset
                .pairs()
                .iter()
                .filter(|p| {
                    let joined = format!("{} {}", p.text_a, p.text_b);
                    c.planted.keyword_label(&joined).unwrap_or(majority) == p.label
                })
                .count();
            let acc = correct as f64 / 1000.0;
            assert!(
                (acc - c.spec.bayes_accuracy()).abs() <= 0.03,
                "seed {seed}: {acc} vs {}",
                c.spec.bayes_accuracy()
            );
        }
    }
}
