//! Gate deciding whether an extracted page is an English privacy policy.
//!
//! Language is checked first; the policy model is consulted only for
//! English text.

mod language;
mod model;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{SnapshotStatus, SnapshotStore, StoreError};
use crate::yearmonth::YearMonth;

pub use language::{detect_language, language_scores, LanguageError, LanguageGuess, ENGLISH_MIN_SIMILARITY, MIN_CHARS};
pub use model::{
    featurize, train_gate, Features, LabeledText, LinearTextModel, ModelError, TrainConfig, TrainingMeta, DEFAULT_DIM,
    MIN_PER_CLASS,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "lowercase")]
pub enum Verdict {
    Valid,
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateVerdict {
    pub is_english: bool,
    pub language_confidence: f64,
    /// `None` when the language check already rejected the text.
    pub policy_probability: Option<f64>,
    pub verdict: Verdict,
}

impl GateVerdict {
    pub fn is_valid(&self) -> bool {
        self.verdict == Verdict::Valid
    }
}

pub fn classify_policy(text: &str, model: &LinearTextModel) -> GateVerdict {
    let guess = match detect_language(text) {
        Ok(g) => g,
        Err(LanguageError::TooShort { .. }) => {
            return GateVerdict {
                is_english: false,
                language_confidence: 0.0,
                policy_probability: None,
                verdict: Verdict::Invalid("too-short".into()),
            }
        }
    };
    if !guess.is_english {
        return GateVerdict {
            is_english: false,
            language_confidence: guess.confidence,
            policy_probability: None,
            verdict: Verdict::Invalid("non-english".into()),
        };
    }
    let p = model.probability(text);
    GateVerdict {
        is_english: true,
        language_confidence: guess.confidence,
        policy_probability: Some(p),
        verdict: if p > model.threshold { Verdict::Valid } else { Verdict::Invalid("not-policy".into()) },
    }
}

/// Reads `<dir>/policy/*.txt` as positives and `<dir>/other/*.txt` as
/// negatives, in file-name order.
pub fn load_labeled_corpus(dir: &Path) -> std::io::Result<Vec<LabeledText>> {
    let mut out = Vec::new();
    for (sub, is_policy) in [("policy", true), ("other", false)] {
        let mut paths: Vec<_> = fs::read_dir(dir.join(sub))?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
        paths.retain(|p| p.extension().is_some_and(|e| e == "txt"));
        paths.sort();
        for p in paths {
            out.push(LabeledText { text: fs::read_to_string(p)?, is_policy });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GateReport {
    pub valid: usize,
    /// `(policy_id, month, reason)` for every snapshot the gate turned away.
    pub rejected: Vec<(String, YearMonth, String)>,
}

/// Runs the gate over every extracted snapshot in the store. Rejected
/// snapshots get status `rejected(reason)` so later stages skip them;
/// rerunning only revisits snapshots that are still extracted.
pub fn gate_store(store: &SnapshotStore, model: &LinearTextModel) -> Result<GateReport, StoreError> {
    let mut report = GateReport::default();
    for policy_id in store.policies()? {
        let mut manifest = store.manifest(&policy_id)?;
        let mut changed = false;
        for (month, text) in store.extracted_texts(&policy_id)? {
            match classify_policy(&text, model).verdict {
                Verdict::Valid => report.valid += 1,
                Verdict::Invalid(reason) => {
                    if let Some(entry) = manifest.entries.get_mut(&month) {
                        entry.status = SnapshotStatus::Rejected(reason.clone());
                        changed = true;
                    }
                    report.rejected.push((policy_id.clone(), month, reason));
                }
            }
        }
        if changed {
            store.save_manifest(&manifest)?;
        }
    }
    Ok(report)
}
