//! Labeled policies: segments carrying category and attribute labels.
//!
//! Labels arrive as probabilities, either from annotation files on disk or
//! from an external labeler service, and are kept when their probability
//! is strictly greater than [`LABEL_THRESHOLD`].

mod labeler;
mod segment;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::{CategoryId, Taxonomy};

pub use labeler::{label_policy, HttpLabeler, LabelOptions, Labeler, LabelerError, SegmentLabels};
pub use segment::{segment_text, SegmentError, MAX_SENTENCES_PER_SEGMENT};

pub const LABEL_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("annotation I/O on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("annotation schema error: {0}")]
    Schema(String),
    #[error("unknown label {value:?} for {scope}")]
    UnknownLabel { scope: String, value: String },
    #[error(transparent)]
    Labeler(#[from] LabelerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Version {
    Pre,
    Post,
}

impl Version {
    pub fn as_str(self) -> &'static str {
        match self {
            Version::Pre => "pre",
            Version::Post => "post",
        }
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Version {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pre" => Ok(Version::Pre),
            "post" => Ok(Version::Post),
            other => Err(format!("unknown version {other:?}")),
        }
    }
}

/// A policy chunk with raw label probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    #[serde(skip)]
    pub index: usize,
    pub text: String,
    #[serde(default)]
    pub categories: BTreeMap<String, f64>,
    #[serde(default)]
    pub attributes: BTreeMap<String, BTreeMap<String, f64>>,
}

/// A segment reduced to the labels that passed the threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSegment {
    pub index: usize,
    pub text: String,
    pub categories: BTreeSet<CategoryId>,
    pub attributes: BTreeMap<String, BTreeSet<String>>,
}

static NO_VALUES: BTreeSet<String> = BTreeSet::new();

impl LabeledSegment {
    /// Label set of `attribute`; empty when the attribute carries no label.
    pub fn values(&self, attribute: &str) -> &BTreeSet<String> {
        self.attributes.get(attribute).unwrap_or(&NO_VALUES)
    }

    pub fn has_category(&self, category: &CategoryId) -> bool {
        self.categories.contains(category)
    }

    /// Applies the probability threshold, resolving every label against
    /// `taxonomy`. Unknown labels are rejected whatever their probability.
    pub fn from_segment(segment: &Segment, taxonomy: &Taxonomy) -> Result<Self, AnnotationError> {
        if segment.text.trim().is_empty() {
            return Err(AnnotationError::Schema(format!("segment {} has empty text", segment.index)));
        }
        let mut categories = BTreeSet::new();
        for (raw, &p) in &segment.categories {
            check_probability(p, || format!("segment {} category {raw}", segment.index))?;
            let id = taxonomy
                .resolve_category(raw)
                .ok_or_else(|| AnnotationError::UnknownLabel { scope: "category".into(), value: raw.clone() })?;
            if p > LABEL_THRESHOLD {
                categories.insert(id);
            }
        }
        let mut attributes = BTreeMap::new();
        for (raw_attr, values) in &segment.attributes {
            let attr = taxonomy
                .attribute(raw_attr)
                .ok_or_else(|| AnnotationError::UnknownLabel { scope: "attribute".into(), value: raw_attr.clone() })?;
            let mut kept = BTreeSet::new();
            for (raw, &p) in values {
                check_probability(p, || format!("segment {} {}={raw}", segment.index, attr.name))?;
                let value = taxonomy
                    .resolve_value(&attr.name, raw)
                    .ok_or_else(|| AnnotationError::UnknownLabel { scope: attr.name.clone(), value: raw.clone() })?;
                if p > LABEL_THRESHOLD {
                    kept.insert(value);
                }
            }
            if !kept.is_empty() {
                attributes.entry(attr.name.clone()).or_insert_with(BTreeSet::new).extend(kept);
            }
        }
        Ok(LabeledSegment { index: segment.index, text: segment.text.clone(), categories, attributes })
    }
}

fn check_probability(p: f64, what: impl FnOnce() -> String) -> Result<(), AnnotationError> {
    if p.is_finite() && (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(AnnotationError::Schema(format!("{}: probability {p} outside [0, 1]", what())))
    }
}

/// One version of one policy, as an ordered list of labeled segments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedPolicy {
    pub policy_id: String,
    pub version: Version,
    pub segments: Vec<LabeledSegment>,
}

/// The annotation file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationDocument {
    pub policy_id: String,
    pub version: Version,
    pub segments: Vec<Segment>,
}

impl AnnotatedPolicy {
    pub fn from_document(mut doc: AnnotationDocument, taxonomy: &Taxonomy) -> Result<Self, AnnotationError> {
        if doc.policy_id.trim().is_empty() {
            return Err(AnnotationError::Schema("policy_id is empty".into()));
        }
        for (i, s) in doc.segments.iter_mut().enumerate() {
            s.index = i;
        }
        let segments =
            doc.segments.iter().map(|s| LabeledSegment::from_segment(s, taxonomy)).collect::<Result<_, _>>()?;
        Ok(AnnotatedPolicy { policy_id: doc.policy_id, version: doc.version, segments })
    }

    /// Document form; every kept label is written with probability 1.
    pub fn to_document(&self) -> AnnotationDocument {
        AnnotationDocument {
            policy_id: self.policy_id.clone(),
            version: self.version,
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    index: s.index,
                    text: s.text.clone(),
                    categories: s.categories.iter().map(|c| (c.as_str().to_string(), 1.0)).collect(),
                    attributes: s
                        .attributes
                        .iter()
                        .map(|(a, vs)| (a.clone(), vs.iter().map(|v| (v.clone(), 1.0)).collect()))
                        .collect(),
                })
                .collect(),
        }
    }
}

pub fn parse_annotations(json: &str, taxonomy: &Taxonomy) -> Result<AnnotatedPolicy, AnnotationError> {
    let doc: AnnotationDocument = serde_json::from_str(json).map_err(|e| AnnotationError::Schema(e.to_string()))?;
    AnnotatedPolicy::from_document(doc, taxonomy)
}

/// Reads an annotation file and thresholds its probabilities into label sets.
pub fn load_annotations(path: impl AsRef<Path>, taxonomy: &Taxonomy) -> Result<AnnotatedPolicy, AnnotationError> {
    let path = path.as_ref();
    let json = std::fs::read_to_string(path)
        .map_err(|source| AnnotationError::Io { path: path.display().to_string(), source })?;
    parse_annotations(&json, taxonomy)
}

pub fn save_annotations(policy: &AnnotatedPolicy, path: impl AsRef<Path>) -> Result<(), AnnotationError> {
    let path = path.as_ref();
    let json =
        serde_json::to_string_pretty(&policy.to_document()).map_err(|e| AnnotationError::Schema(e.to_string()))?;
    std::fs::write(path, json + "\n").map_err(|source| AnnotationError::Io { path: path.display().to_string(), source })
}

/// File name used for a policy version inside an annotations directory.
pub fn annotation_file_name(policy_id: &str, version: Version) -> String {
    format!("{policy_id}.{version}.json")
}
