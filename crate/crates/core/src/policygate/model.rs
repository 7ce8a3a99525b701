use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::sha256_hex;

/// Default hashed feature dimension.
pub const DEFAULT_DIM: usize = 1 << 18;
pub const MODEL_FORMAT: &str = "polidiff-gate";
pub const MODEL_VERSION: u32 = 1;
/// Fewest examples accepted per class.
pub const MIN_PER_CLASS: usize = 50;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("insufficient data: {count} {class} example(s), need at least {MIN_PER_CLASS}")]
    InsufficientData { class: &'static str, count: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("model file: {0}")]
    Format(String),
}

/// Sparse feature vector: (index, value) pairs with unique indices.
pub type Features = Vec<(usize, f64)>;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

/// Word unigrams and bigrams hashed into `dim` buckets with a hash-derived
/// sign, then scaled to unit length.
pub fn featurize(text: &str, dim: usize) -> Features {
    let toks = tokens(text);
    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
    let mut add = |gram: &str| {
        let h = fnv1a(gram.as_bytes());
        let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
        *acc.entry((h % dim as u64) as usize).or_insert(0.0) += sign;
    };
    for t in &toks {
        add(t);
    }
    for w in toks.windows(2) {
        add(&format!("{} {}", w[0], w[1]));
    }
    let norm = acc.values().map(|v| v * v).sum::<f64>().sqrt();
    acc.into_iter().filter(|(_, v)| *v != 0.0).map(|(i, v)| (i, v / norm)).collect()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub train_size: usize,
    pub test_size: usize,
    pub held_out_accuracy: f64,
    /// Held-out documents whose exact text also occurs in the training split.
    pub leaked_duplicates: usize,
}

/// Logistic regression over hashed n-grams.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTextModel {
    pub dim: usize,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub threshold: f64,
    pub meta: Option<TrainingMeta>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    dim: usize,
    bias: f64,
    threshold: f64,
    /// Non-zero weights only.
    weights: Vec<(usize, f64)>,
    meta: Option<TrainingMeta>,
}

impl LinearTextModel {
    pub fn probability(&self, text: &str) -> f64 {
        let z = featurize(text, self.dim).iter().map(|&(i, v)| self.weights[i] * v).sum::<f64>() + self.bias;
        sigmoid(z)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            dim: self.dim,
            bias: self.bias,
            threshold: self.threshold,
            weights: self.weights.iter().enumerate().filter(|(_, w)| **w != 0.0).map(|(i, w)| (i, *w)).collect(),
            meta: self.meta.clone(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_str(json).map_err(|e| ModelError::Format(e.to_string()))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(ModelError::Format(format!("unsupported model {} v{}", file.format, file.version)));
        }
        if file.dim == 0 {
            return Err(ModelError::Format("dimension must be positive".into()));
        }
        let mut weights = vec![0.0; file.dim];
        for (i, w) in file.weights {
            *weights.get_mut(i).ok_or_else(|| ModelError::Format(format!("weight index {i} out of range")))? = w;
        }
        Ok(LinearTextModel { dim: file.dim, weights, bias: file.bias, threshold: file.threshold, meta: file.meta })
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub dim: usize,
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub test_fraction: f64,
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: DEFAULT_DIM,
            seed: 42,
            epochs: 20,
            learning_rate: 0.5,
            l2: 1e-6,
            test_fraction: 0.2,
            threshold: 0.5,
        }
    }
}

/// A labeled training document; `true` marks a privacy policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledText {
    pub text: String,
    pub is_policy: bool,
}

/// Seeded stratified split: indices of training and held-out documents.
fn split(corpus: &[LabeledText], config: &TrainConfig, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..corpus.len()).filter(|&i| corpus[i].is_policy == class).collect();
        idx.shuffle(rng);
        let n_test = (idx.len() as f64 * config.test_fraction).round() as usize;
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    test.sort_unstable();
    (train, test)
}

/// Trains with per-example SGD on logistic loss for a fixed number of
/// epochs and reports held-out accuracy.
pub fn train_gate(corpus: &[LabeledText], config: &TrainConfig) -> Result<LinearTextModel, ModelError> {
    let positives = corpus.iter().filter(|d| d.is_policy).count();
    let negatives = corpus.len() - positives;
    if positives < MIN_PER_CLASS {
        return Err(ModelError::InsufficientData { class: "policy", count: positives });
    }
    if negatives < MIN_PER_CLASS {
        return Err(ModelError::InsufficientData { class: "non-policy", count: negatives });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (mut train, test) = split(corpus, config, &mut rng);
    let features: Vec<Features> = corpus.iter().map(|d| featurize(&d.text, config.dim)).collect();

    let mut weights = vec![0.0; config.dim];
    let mut bias = 0.0;
    for epoch in 0..config.epochs {
        train.shuffle(&mut rng);
        let lr = config.learning_rate / (1.0 + epoch as f64 * 0.1);
        for &i in &train {
            let x = &features[i];
            let z = x.iter().map(|&(j, v)| weights[j] * v).sum::<f64>() + bias;
            let y = if corpus[i].is_policy { 1.0 } else { 0.0 };
            let g = sigmoid(z) - y;
            for &(j, v) in x {
                weights[j] -= lr * (g * v + config.l2 * weights[j]);
            }
            bias -= lr * g;
        }
    }

    let mut model = LinearTextModel { dim: config.dim, weights, bias, threshold: config.threshold, meta: None };
    let correct = test
        .iter()
        .filter(|&&i| (model.probability(&corpus[i].text) > config.threshold) == corpus[i].is_policy)
        .count();
    let train_hashes: HashSet<String> = train.iter().map(|&i| sha256_hex(corpus[i].text.as_bytes())).collect();
    let leaked = test.iter().filter(|&&i| train_hashes.contains(&sha256_hex(corpus[i].text.as_bytes()))).count();
    if leaked > 0 {
        log::warn!("{leaked} held-out document(s) duplicate training documents; accuracy is optimistic");
    }
    model.meta = Some(TrainingMeta {
        seed: config.seed,
        epochs: config.epochs,
        learning_rate: config.learning_rate,
        l2: config.l2,
        train_size: train.len(),
        test_size: test.len(),
        held_out_accuracy: if test.is_empty() { 0.0 } else { correct as f64 / test.len() as f64 },
        leaked_duplicates: leaked,
    });
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str, is_policy: bool) -> LabeledText {
        LabeledText { text: text.into(), is_policy }
    }

    #[test]
    fn features_are_unit_length_and_deterministic() {
        let f = featurize("We collect your email. We collect data.", 1 << 10);
        let norm: f64 = f.iter().map(|(_, v)| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert_eq!(f, featurize("we COLLECT your email we collect data", 1 << 10));
        assert!(featurize("", 16).is_empty());
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn ten_positives_is_insufficient() {
        let mut corpus: Vec<LabeledText> = (0..10).map(|i| doc(&format!("privacy {i}"), true)).collect();
        corpus.extend((0..100).map(|i| doc(&format!("news {i}"), false)));
        assert!(matches!(
            train_gate(&corpus, &TrainConfig::default()),
            Err(ModelError::InsufficientData { class: "policy", count: 10 })
        ));
    }

    #[test]
    fn duplicates_across_split_are_reported() {
        let corpus: Vec<LabeledText> = (0..120)
            .map(|i| {
                if i % 2 == 0 {
                    doc("we collect your personal data", true)
                } else {
                    doc("the match ended in a draw", false)
                }
            })
            .collect();
        let config = TrainConfig { dim: 1 << 12, epochs: 3, ..TrainConfig::default() };
        let model = train_gate(&corpus, &config).unwrap();
        let meta = model.meta.unwrap();
        assert_eq!(meta.test_size, 24);
        assert_eq!(meta.leaked_duplicates, 24);
    }

    #[test]
    fn split_is_stratified_and_seeded() {
        let corpus: Vec<LabeledText> = (0..150).map(|i| doc(&i.to_string(), i < 100)).collect();
        let config = TrainConfig::default();
        let (train, test) = split(&corpus, &config, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(test.iter().filter(|&&i| corpus[i].is_policy).count(), 20);
        assert_eq!(test.len(), 30);
        assert_eq!(train.len(), 120);
        let again = split(&corpus, &config, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!((train, test), again);
    }

    #[test]
    fn json_round_trip_preserves_scores() {
        let corpus: Vec<LabeledText> = (0..120)
            .map(|i| {
                if i % 2 == 0 {
                    doc(&format!("we collect your data {i}"), true)
                } else {
                    doc(&format!("the team won {i}"), false)
                }
            })
            .collect();
        let model = train_gate(&corpus, &TrainConfig { dim: 1 << 12, ..TrainConfig::default() }).unwrap();
        let back = LinearTextModel::from_json(&model.to_json()).unwrap();
        for d in &corpus {
            assert!((model.probability(&d.text) - back.probability(&d.text)).abs() <= 1e-12);
        }
        assert_eq!(back, model);
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(LinearTextModel::from_json(
            r#"{"format":"x","version":1,"dim":1,"bias":0,"threshold":0.5,"weights":[],"meta":null}"#
        )
        .is_err());
        assert!(LinearTextModel::from_json(
            r#"{"format":"polidiff-gate","version":1,"dim":2,"bias":0,"threshold":0.5,"weights":[[5,1.0]],"meta":null}"#
        )
        .is_err());
    }
}
