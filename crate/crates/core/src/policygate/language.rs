//! Character-trigram language identification.
//!
//! Each bundled language has a trigram frequency profile built from a sample
//! text. Input text is profiled the same way and compared by cosine
//! similarity.

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Shortest input, in characters, that can be classified.
pub const MIN_CHARS: usize = 100;

/// Similarity the English profile must reach for a text to count as English.
pub const ENGLISH_MIN_SIMILARITY: f64 = 0.6;

const SAMPLES: [(&str, &str); 7] = [
    ("en", include_str!("../../data/lang/en.txt")),
    ("de", include_str!("../../data/lang/de.txt")),
    ("fr", include_str!("../../data/lang/fr.txt")),
    ("es", include_str!("../../data/lang/es.txt")),
    ("it", include_str!("../../data/lang/it.txt")),
    ("nl", include_str!("../../data/lang/nl.txt")),
    ("pt", include_str!("../../data/lang/pt.txt")),
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LanguageError {
    #[error("text too short for language detection: {chars} < {MIN_CHARS} characters")]
    TooShort { chars: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageGuess {
    pub is_english: bool,
    /// Best-matching language code.
    pub language: String,
    /// Cosine similarity to the best profile, in [0, 1].
    pub confidence: f64,
}

struct Profile {
    code: &'static str,
    counts: HashMap<String, f64>,
    norm: f64,
}

fn trigram_counts(text: &str) -> HashMap<String, f64> {
    let mut counts = HashMap::new();
    for word in text.split(|c: char| !c.is_alphabetic()).filter(|w| !w.is_empty()) {
        let padded: Vec<char> =
            std::iter::once(' ').chain(word.chars().flat_map(char::to_lowercase)).chain(std::iter::once(' ')).collect();
        for w in padded.windows(3) {
            *counts.entry(w.iter().collect()).or_insert(0.0) += 1.0;
        }
    }
    counts
}

fn norm(counts: &HashMap<String, f64>) -> f64 {
    counts.values().map(|c| c * c).sum::<f64>().sqrt()
}

fn profiles() -> &'static [Profile] {
    static PROFILES: OnceLock<Vec<Profile>> = OnceLock::new();
    PROFILES.get_or_init(|| {
        SAMPLES
            .iter()
            .map(|(code, sample)| {
                let counts = trigram_counts(sample);
                let norm = norm(&counts);
                Profile { code, counts, norm }
            })
            .collect()
    })
}

/// Cosine similarity of `text` to each bundled profile, best first.
pub fn language_scores(text: &str) -> Vec<(&'static str, f64)> {
    let counts = trigram_counts(text);
    let n = norm(&counts);
    let mut scores: Vec<(&'static str, f64)> = profiles()
        .iter()
        .map(|p| {
            if n == 0.0 {
                return (p.code, 0.0);
            }
            let dot: f64 = counts.iter().filter_map(|(g, c)| p.counts.get(g).map(|pc| c * pc)).sum();
            (p.code, dot / (n * p.norm))
        })
        .collect();
    scores.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    scores
}

pub fn detect_language(text: &str) -> Result<LanguageGuess, LanguageError> {
    let chars = text.chars().count();
    if chars < MIN_CHARS {
        return Err(LanguageError::TooShort { chars });
    }
    let (language, confidence) = language_scores(text)[0];
    Ok(LanguageGuess {
        is_english: language == "en" && confidence >= ENGLISH_MIN_SIMILARITY,
        language: language.to_string(),
        confidence,
    })
}
