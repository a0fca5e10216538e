//! Rule-based suffix lemmatization.
//!
//! Strips plural `-s`/`-es`/`-ies`, gerund `-ing` and past `-ed`, undoubling
//! a trailing consonant where the strip leaves one (`stopped` -> `stop`).
//! Rules are applied until nothing changes, so every output is a fixpoint and
//! lemmatizing twice is the same as lemmatizing once.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

/// Swappable token-to-lemma mapping. Implementations must be idempotent.
pub trait Lemmatizer: Send + Sync {
    fn lemma(&self, token: &str) -> String;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityLemmatizer;

impl Lemmatizer for IdentityLemmatizer {
    fn lemma(&self, token: &str) -> String {
        token.to_string()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SuffixLemmatizer;

const IRREGULAR: &[(&str, &str)] = &[
    ("children", "child"),
    ("people", "person"),
    ("men", "man"),
    ("women", "woman"),
    ("mice", "mouse"),
    ("feet", "foot"),
    ("teeth", "tooth"),
    ("geese", "goose"),
    ("indices", "index"),
    ("matrices", "matrix"),
    ("vertices", "vertex"),
];

// Words the suffix rules would damage.
const PROTECTED: &[&str] = &[
    "access",
    "address",
    "alias",
    "analysis",
    "anything",
    "atlas",
    "basis",
    "bed",
    "bias",
    "bleed",
    "breed",
    "bring",
    "bus",
    "canvas",
    "ceiling",
    "class",
    "during",
    "embed",
    "evening",
    "everything",
    "exceed",
    "feed",
    "gas",
    "has",
    "his",
    "hundred",
    "indeed",
    "is",
    "king",
    "less",
    "morning",
    "need",
    "news",
    "nothing",
    "process",
    "proceed",
    "red",
    "ring",
    "seed",
    "series",
    "shed",
    "something",
    "species",
    "speed",
    "spring",
    "status",
    "string",
    "succeed",
    "thing",
    "this",
    "was",
    "yes",
];

fn irregular() -> &'static HashMap<&'static str, &'static str> {
    static MAP: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    MAP.get_or_init(|| IRREGULAR.iter().copied().collect())
}

fn protected() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        PROTECTED
            .iter()
            .copied()
            .chain(IRREGULAR.iter().map(|(_, v)| *v))
            .collect()
    })
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

fn has_vowel(s: &str) -> bool {
    s.chars().any(|c| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y'))
}

fn undouble(stem: &str) -> String {
    let mut chars = stem.chars().rev();
    match (chars.next(), chars.next()) {
        (Some(a), Some(b))
            if a == b && a.is_ascii_alphabetic() && !matches!(a, 'a' | 'e' | 'i' | 'o' | 'u' | 'l' | 's' | 'z') =>
        {
            stem[..stem.len() - a.len_utf8()].to_string()
        }
        _ => stem.to_string(),
    }
}

/// One rule application, or `None` when `word` is already a lemma.
fn step(word: &str) -> Option<String> {
    if let Some(base) = irregular().get(word) {
        return Some((*base).to_string());
    }
    if protected().contains(word) {
        return None;
    }
    let len = char_len(word);
    if len > 4 {
        if let Some(stem) = word.strip_suffix("ies").or_else(|| word.strip_suffix("ied")) {
            return Some(format!("{stem}y"));
        }
    }
    if let Some(stem) = word.strip_suffix("sses") {
        return Some(format!("{stem}ss"));
    }
    if let Some(stem) = word.strip_suffix("es") {
        let sibilant = ["s", "x", "z", "ch", "sh"].iter().any(|s| stem.ends_with(s));
        if sibilant && char_len(stem) >= 3 {
            return Some(stem.to_string());
        }
    }
    if word.ends_with('s') && !word.ends_with("ss") && !word.ends_with("us") && !word.ends_with("is") {
        let stem = &word[..word.len() - 1];
        if char_len(stem) >= 3 {
            return Some(stem.to_string());
        }
    }
    for suffix in ["ing", "ed"] {
        if let Some(stem) = word.strip_suffix(suffix) {
            if char_len(stem) >= 3 && has_vowel(stem) {
                return Some(undouble(stem));
            }
        }
    }
    None
}

impl Lemmatizer for SuffixLemmatizer {
    fn lemma(&self, token: &str) -> String {
        let mut current = token.to_string();
        // Every rule shortens the word or lands on a protected form.
        for _ in 0..64 {
            match step(&current) {
                Some(next) if next != current && !next.is_empty() => current = next,
                _ => break,
            }
        }
        current
    }
}
