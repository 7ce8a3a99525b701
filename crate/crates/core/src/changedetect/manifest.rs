use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{select_pair, DatedText, PairError, PairOptions, SnapshotPair};
use crate::corpus::{SnapshotStore, StoreError};
use crate::yearmonth::YearMonth;

pub const PAIRS_FILE: &str = "pairs.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedPolicy {
    pub policy_id: String,
    pub reason: String,
}

/// Selected pairs for every policy in a store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairsManifest {
    pub pivot: YearMonth,
    pub threshold: f64,
    pub pairs: Vec<SnapshotPair>,
    pub skipped: Vec<SkippedPolicy>,
}

impl PairsManifest {
    pub fn build(store: &SnapshotStore, pivot: YearMonth, options: &PairOptions) -> Result<Self, StoreError> {
        let outcomes: Vec<Result<SnapshotPair, SkippedPolicy>> = store
            .policies()?
            .par_iter()
            .map(|id| {
                let texts = store.extracted_texts(id)?;
                let dated: Vec<DatedText<'_>> = texts.iter().map(|(m, t)| DatedText { month: *m, text: t }).collect();
                Ok(select_pair(id, &dated, pivot, options).map_err(|e| SkippedPolicy {
                    policy_id: id.clone(),
                    reason: match e {
                        PairError::NoPair(r) => r.to_string(),
                        other => other.to_string(),
                    },
                }))
            })
            .collect::<Result<_, StoreError>>()?;
        let (mut pairs, mut skipped) = (Vec::new(), Vec::new());
        for o in outcomes {
            match o {
                Ok(p) => pairs.push(p),
                Err(s) => skipped.push(s),
            }
        }
        Ok(PairsManifest { pivot, threshold: options.threshold, pairs, skipped })
    }

    pub fn save(&self, store: &SnapshotStore) -> Result<(), StoreError> {
        let mut json = serde_json::to_vec_pretty(self).expect("manifest serializes");
        json.push(b'\n');
        store.write_file(PAIRS_FILE, &json).map(|_| ())
    }

    pub fn load(store: &SnapshotStore) -> Result<Self, StoreError> {
        Self::load_path(&store.root().join(PAIRS_FILE))
    }

    /// Loads a manifest saved anywhere, not just at the store default.
    pub fn load_path(path: &std::path::Path) -> Result<Self, StoreError> {
        let bytes = std::fs::read(path).map_err(|source| StoreError::Io { path: path.to_path_buf(), source })?;
        serde_json::from_slice(&bytes).map_err(|source| StoreError::Manifest { path: path.to_path_buf(), source })
    }
}
