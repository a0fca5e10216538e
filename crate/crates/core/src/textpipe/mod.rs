//! Text normalization and TF-IDF vectorization for requirement pairs.
//!
//! `normalize` turns raw text into tokens (lowercase, punctuation split,
//! stopword filter, suffix lemmatization). `fit_vectorizer` learns a
//! vocabulary and smoothed idf weights from training documents only:
//!
//! ```text
//! idf(t) = ln((1 + n_docs) / (1 + df(t))) + 1
//! ```
//!
//! and `transform` maps a token list to an L2-normalized sparse vector of
//! `tf * idf` weights.

mod lemma;
mod stopwords;
mod vector;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::LabeledPair;

pub use lemma::{IdentityLemmatizer, Lemmatizer, SuffixLemmatizer};
pub use stopwords::builtin_stopwords;
pub use vector::DocumentVector;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmatizerKind {
    #[default]
    RuleSuffix,
    None,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// Tokens of both texts form one document.
    #[default]
    Concat,
    /// Each text is vectorized on its own; the two vectors are laid end to
    /// end (dimension `2V`).
    SeparateConcatVectors,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stopwords {
    #[default]
    Builtin,
    None,
    Custom(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    pub stopwords: Stopwords,
    pub lemmatizer: LemmatizerKind,
    pub pair_mode: PairMode,
    pub min_df: usize,
    pub sublinear_tf: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_punctuation: true,
            stopwords: Stopwords::Builtin,
            lemmatizer: LemmatizerKind::RuleSuffix,
            pair_mode: PairMode::Concat,
            min_df: 2,
            sublinear_tf: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), TextError> {
        if self.min_df < 1 {
            return Err(TextError::InvalidConfig("min_df must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TextError {
    #[error("no term reaches the minimum document frequency of {min_df}")]
    EmptyVocabulary { min_df: usize },
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
}

impl TextError {
    pub fn code(&self) -> &'static str {
        match self {
            TextError::EmptyVocabulary { .. } => "EMPTY_VOCABULARY",
            TextError::InvalidConfig(_) => "INVALID_PIPELINE",
        }
    }
}

/// A ready-to-use tokenizer for one [`PipelineConfig`].
#[derive(Clone)]
pub struct Normalizer {
    lowercase: bool,
    strip_punctuation: bool,
    stopwords: Arc<HashSet<String>>,
    lemmatizer: Arc<dyn Lemmatizer>,
}

impl std::fmt::Debug for Normalizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Normalizer")
            .field("lowercase", &self.lowercase)
            .field("strip_punctuation", &self.strip_punctuation)
            .field("stopwords", &self.stopwords.len())
            .finish()
    }
}

impl Normalizer {
    pub fn new(cfg: &PipelineConfig) -> Self {
        let lemmatizer: Arc<dyn Lemmatizer> = match cfg.lemmatizer {
            LemmatizerKind::RuleSuffix => Arc::new(SuffixLemmatizer),
            LemmatizerKind::None => Arc::new(IdentityLemmatizer),
        };
        Self::with_lemmatizer(cfg, lemmatizer)
    }

    /// Uses a caller-supplied lemmatizer instead of the configured one.
    pub fn with_lemmatizer(cfg: &PipelineConfig, lemmatizer: Arc<dyn Lemmatizer>) -> Self {
        let stopwords: HashSet<String> = match &cfg.stopwords {
            Stopwords::Builtin => builtin_stopwords().iter().map(|s| s.to_string()).collect(),
            Stopwords::None => HashSet::new(),
            Stopwords::Custom(words) => words.iter().cloned().collect(),
        };
        Self {
            lowercase: cfg.lowercase,
            strip_punctuation: cfg.strip_punctuation,
            stopwords: Arc::new(stopwords),
            lemmatizer,
        }
    }

    pub fn tokens(&self, text: &str) -> Vec<String> {
        let text = if self.lowercase {
            text.to_lowercase()
        } else {
            text.to_string()
        };
        let strip = self.strip_punctuation;
        text.split(|c: char| if strip { !c.is_alphanumeric() } else { c.is_whitespace() })
            .filter(|t| !t.is_empty() && !self.stopwords.contains(*t))
            .map(|t| self.lemmatizer.lemma(t))
            // A lemma can itself be a stopword; dropping it keeps the map idempotent.
            .filter(|t| !t.is_empty() && !self.stopwords.contains(t))
            .collect()
    }
}

/// Tokenizes `text` under `cfg`.
pub fn normalize(text: &str, cfg: &PipelineConfig) -> Vec<String> {
    Normalizer::new(cfg).tokens(text)
}

/// Fitted vocabulary and idf weights. Frozen after fitting.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "VectorizerRepr", into = "VectorizerRepr")]
pub struct VectorizerModel {
    terms: Vec<String>,
    idf: Vec<f64>,
    n_docs: usize,
    config: PipelineConfig,
    index: HashMap<String, usize>,
    normalizer: Normalizer,
}

#[derive(Serialize, Deserialize)]
struct VectorizerRepr {
    terms: Vec<String>,
    idf: Vec<f64>,
    n_docs: usize,
    config: PipelineConfig,
}

impl From<VectorizerRepr> for VectorizerModel {
    fn from(r: VectorizerRepr) -> Self {
        VectorizerModel::assemble(r.terms, r.idf, r.n_docs, r.config)
    }
}

impl From<VectorizerModel> for VectorizerRepr {
    fn from(m: VectorizerModel) -> Self {
        VectorizerRepr {
            terms: m.terms,
            idf: m.idf,
            n_docs: m.n_docs,
            config: m.config,
        }
    }
}

impl PartialEq for VectorizerModel {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms && self.idf == other.idf && self.n_docs == other.n_docs && self.config == other.config
    }
}

impl VectorizerModel {
    fn assemble(terms: Vec<String>, idf: Vec<f64>, n_docs: usize, config: PipelineConfig) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let normalizer = Normalizer::new(&config);
        Self {
            terms,
            idf,
            n_docs,
            config,
            index,
            normalizer,
        }
    }

    /// Vocabulary size `V`.
    pub fn vocabulary_size(&self) -> usize {
        self.terms.len()
    }

    /// Dimension of the vectors produced by [`Self::vectorize_pair`].
    pub fn feature_dim(&self) -> usize {
        match self.config.pair_mode {
            PairMode::Concat => self.terms.len(),
            PairMode::SeparateConcatVectors => 2 * self.terms.len(),
        }
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.index.get(term).map(|&i| self.idf[i])
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    /// `tf * idf` weights of the in-vocabulary tokens, L2-normalized.
    /// Out-of-vocabulary tokens are ignored; a document with none left maps
    /// to the zero vector.
    pub fn transform(&self, doc: &[String]) -> DocumentVector {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for tok in doc {
            if let Some(&i) = self.index.get(tok) {
                *counts.entry(i).or_default() += 1;
            }
        }
        let entries = counts
            .into_iter()
            .map(|(i, c)| {
                let tf = if self.config.sublinear_tf {
                    1.0 + (c as f64).ln()
                } else {
                    c as f64
                };
                (i as u32, tf * self.idf[i])
            })
            .collect();
        DocumentVector::from_sorted(self.terms.len(), entries).l2_normalized()
    }

    pub fn vectorize_pair(&self, pair: &LabeledPair) -> DocumentVector {
        let a = self.normalizer.tokens(&pair.text_a);
        let b = self.normalizer.tokens(&pair.text_b);
        match self.config.pair_mode {
            PairMode::Concat => {
                let mut joined = a;
                joined.extend(b);
                self.transform(&joined)
            }
            PairMode::SeparateConcatVectors => self.transform(&a).concat(&self.transform(&b)),
        }
    }

    /// Two-column `term,idf` CSV in vocabulary order.
    pub fn write_vocabulary_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["term", "idf"])?;
        for (t, idf) in self.terms.iter().zip(&self.idf) {
            w.write_record([t.as_str(), &idf.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Learns the vocabulary (terms with document frequency `>= min_df`, sorted
/// lexicographically) and smoothed idf weights.
pub fn fit_vectorizer(docs: &[Vec<String>], cfg: &PipelineConfig) -> Result<VectorizerModel, TextError> {
    cfg.validate()?;
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let unique: HashSet<&str> = doc.iter().map(String::as_str).collect();
        for t in unique {
            *df.entry(t).or_default() += 1;
        }
    }
    let n_docs = docs.len();
    let (terms, idf): (Vec<String>, Vec<f64>) = df
        .into_iter()
        .filter(|&(_, d)| d >= cfg.min_df)
        .map(|(t, d)| {
            let idf = ((1.0 + n_docs as f64) / (1.0 + d as f64)).ln() + 1.0;
            (t.to_string(), idf)
        })
        .unzip();
    if terms.is_empty() {
        return Err(TextError::EmptyVocabulary { min_df: cfg.min_df });
    }
    Ok(VectorizerModel::assemble(terms, idf, n_docs, cfg.clone()))
}

/// Fits on the texts of `pairs`: one document per pair in concat mode, one
/// per text otherwise.
pub fn fit_pairs<'a>(
    pairs: impl IntoIterator<Item = &'a LabeledPair>,
    cfg: &PipelineConfig,
) -> Result<VectorizerModel, TextError> {
    let norm = Normalizer::new(cfg);
    let mut docs = Vec::new();
    for p in pairs {
        let a = norm.tokens(&p.text_a);
        let b = norm.tokens(&p.text_b);
        match cfg.pair_mode {
            PairMode::Concat => {
                let mut joined = a;
                joined.extend(b);
                docs.push(joined);
            }
            PairMode::SeparateConcatVectors => {
                docs.push(a);
                docs.push(b);
            }
        }
    }
    fit_vectorizer(&docs, cfg)
}

pub fn transform(doc: &[String], model: &VectorizerModel) -> DocumentVector {
    model.transform(doc)
}

/// Vectorizes a pair with the model's own pipeline settings.
pub fn vectorize_pair(pair: &LabeledPair, model: &VectorizerModel) -> DocumentVector {
    model.vectorize_pair(pair)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Label;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn cfg(min_df: usize) -> PipelineConfig {
        PipelineConfig {
            min_df,
            stopwords: Stopwords::None,
            ..Default::default()
        }
    }

    #[test]
    fn normalize_examples() {
        let c = PipelineConfig::default();
        assert_eq!(
            normalize("Update navigation toolbars!", &c),
            vec!["update", "navigation", "toolbar"]
        );
        assert!(normalize("", &c).is_empty());
        assert!(normalize("the of and", &c).is_empty());
        // "does" is a stopword before lemmatization.
        assert!(normalize("Does", &c).is_empty());
    }

    #[test]
    fn normalize_toggles() {
        let c = PipelineConfig {
            lowercase: false,
            strip_punctuation: false,
            stopwords: Stopwords::None,
            lemmatizer: LemmatizerKind::None,
            ..Default::default()
        };
        assert_eq!(normalize("The toolbars!", &c), vec!["The", "toolbars!"]);
    }

    #[test]
    fn idf_hand_values() {
        let docs = vec![toks("a b"), toks("a c")];
        let m = fit_vectorizer(&docs, &cfg(1)).unwrap();
        assert_eq!(m.terms(), &["a", "b", "c"]);
        assert_eq!(m.idf("a"), Some(1.0));
        let expected_b = (3.0f64 / 2.0).ln() + 1.0;
        assert!((m.idf("b").unwrap() - expected_b).abs() < 1e-15);

        let m2 = fit_vectorizer(&docs, &cfg(2)).unwrap();
        assert_eq!(m2.terms(), &["a"]);
    }

    #[test]
    fn identical_docs_have_unit_idf() {
        let docs = vec![toks("x y"); 5];
        let m = fit_vectorizer(&docs, &cfg(1)).unwrap();
        assert!(m.terms().iter().all(|t| m.idf(t) == Some(1.0)));
    }

    #[test]
    fn empty_vocabulary() {
        let docs = vec![toks("a"), toks("b")];
        assert!(matches!(
            fit_vectorizer(&docs, &cfg(2)),
            Err(TextError::EmptyVocabulary { min_df: 2 })
        ));
        assert!(matches!(
            fit_vectorizer(&[], &cfg(1)),
            Err(TextError::EmptyVocabulary { .. })
        ));
    }

    fn model_ab() -> VectorizerModel {
        // idf(a) = 1 and idf(b) = 2 set directly.
        VectorizerModel::assemble(vec!["a".into(), "b".into()], vec![1.0, 2.0], 1, cfg(1))
    }

    #[test]
    fn transform_examples() {
        let m = model_ab();
        assert!(m.transform(&toks("zzz qqq")).is_zero());
        let v = m.transform(&toks("a a"));
        assert_eq!(v.entries(), &[(0, 1.0)]);
        let v = m.transform(&toks("a b"));
        let s5 = 5f64.sqrt();
        assert!((v.get(0) - 1.0 / s5).abs() < 1e-15);
        assert!((v.get(1) - 2.0 / s5).abs() < 1e-15);
    }

    #[test]
    fn sublinear_tf() {
        let mut c = cfg(1);
        c.sublinear_tf = true;
        let m = VectorizerModel::assemble(vec!["a".into(), "b".into()], vec![1.0, 1.0], 1, c);
        let v = m.transform(&toks("a a b"));
        let wa = 1.0 + 2f64.ln();
        let norm = (wa * wa + 1.0).sqrt();
        assert!((v.get(0) - wa / norm).abs() < 1e-15);
    }

    fn pair(a: &str, b: &str) -> LabeledPair {
        LabeledPair {
            id: "p".into(),
            text_a: a.into(),
            text_b: b.into(),
            label: Label::Dependent,
        }
    }

    #[test]
    fn pair_modes() {
        let m = model_ab();
        assert_eq!(m.vectorize_pair(&pair("a", "b")), m.transform(&toks("a b")));
        assert_eq!(m.vectorize_pair(&pair("a b", "a b")), m.transform(&toks("a b a b")));
        let mut c = cfg(1);
        c.pair_mode = PairMode::SeparateConcatVectors;
        let sep = VectorizerModel::assemble(vec!["a".into(), "b".into()], vec![1.0, 2.0], 1, c);
        let v = sep.vectorize_pair(&pair("a", "b"));
        assert_eq!(v.dim(), 4);
        assert_eq!(sep.feature_dim(), 4);
        assert_eq!(v.entries(), &[(0, 1.0), (3, 1.0)]);
    }

    #[test]
    fn fit_pairs_separate_counts_texts() {
        let mut c = cfg(1);
        c.pair_mode = PairMode::SeparateConcatVectors;
        let m = fit_pairs(&[pair("alpha", "beta")], &c).unwrap();
        assert_eq!(m.idf("alpha"), Some((3.0f64 / 2.0).ln() + 1.0));
    }

    #[test]
    fn vocabulary_csv_export() {
        let mut out = Vec::new();
        model_ab().write_vocabulary_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "term,idf\na,1\nb,2\n");
    }

    #[test]
    fn serde_round_trip() {
        let m = fit_vectorizer(&[toks("a b"), toks("a c")], &cfg(1)).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: VectorizerModel = serde_json::from_str(&json).unwrap();
        assert_eq!(m, back);
        assert_eq!(back.term_index("c"), Some(2));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(text in "\\PC{0,60}") {
            let c = PipelineConfig::default();
            let once = normalize(&text, &c);
            let twice = normalize(&once.join(" "), &c);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn transform_unit_norm_and_pure(doc in proptest::collection::vec("[a-e]", 0..20)) {
            let m = fit_vectorizer(&[toks("a b c"), toks("c d e"), toks("a e")], &cfg(1)).unwrap();
            let v = m.transform(&doc);
            let again = m.transform(&doc);
            prop_assert_eq!(&v, &again);
            if !v.is_zero() {
                prop_assert!((v.norm() - 1.0).abs() < 1e-9);
            }
        }
    }
}
