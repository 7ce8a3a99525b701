//! Client side of the segment-labeler protocol.
//!
//! A request is a JSON array of segment texts. The response is a JSON array
//! of the same length whose elements have the per-segment shape of the
//! annotation file: `{"categories": {name: p}, "attributes": {attr: {value: p}}}`.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AnnotatedPolicy, AnnotationError, LabeledSegment, Segment, Version};
use crate::http::{HttpClient, HttpConfig};
use crate::taxonomy::Taxonomy;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabelerError {
    #[error("labeler endpoint unavailable after {attempts} attempt(s): {reason}")]
    EndpointUnavailable { attempts: u32, reason: String },
    #[error("malformed labeler response: {0}")]
    MalformedResponse(String),
}

/// Probabilities for one segment, as returned by a labeler.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentLabels {
    #[serde(default)]
    pub categories: BTreeMap<String, f64>,
    #[serde(default)]
    pub attributes: BTreeMap<String, BTreeMap<String, f64>>,
}

impl SegmentLabels {
    fn check_range(&self) -> Result<(), LabelerError> {
        let all = self.categories.iter().chain(self.attributes.values().flat_map(|m| m.iter()));
        for (name, &p) in all {
            if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                return Err(LabelerError::MalformedResponse(format!("probability {p} for {name:?} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Anything that can assign label probabilities to a batch of segments.
pub trait Labeler: Sync {
    fn label(&self, texts: &[String]) -> Result<Vec<SegmentLabels>, LabelerError>;
}

/// Labeler reached over HTTP with a single POST per batch.
#[derive(Debug, Clone)]
pub struct HttpLabeler {
    url: String,
    client: HttpClient,
}

impl HttpLabeler {
    pub fn new(url: impl Into<String>, config: HttpConfig) -> Self {
        HttpLabeler { url: url.into(), client: HttpClient::new(config) }
    }
}

impl Labeler for HttpLabeler {
    fn label(&self, texts: &[String]) -> Result<Vec<SegmentLabels>, LabelerError> {
        let body = serde_json::to_value(texts).expect("strings serialize");
        let bytes = self
            .client
            .post_json(&self.url, &body)
            .map_err(|e| LabelerError::EndpointUnavailable { attempts: e.attempts, reason: e.last.to_string() })?;
        serde_json::from_slice(&bytes).map_err(|e| LabelerError::MalformedResponse(e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct LabelOptions {
    /// Segments per request; `None` sends the whole policy at once.
    pub batch_size: Option<usize>,
    /// Upper bound on concurrent requests.
    pub parallelism: usize,
}

impl Default for LabelOptions {
    fn default() -> Self {
        LabelOptions { batch_size: None, parallelism: 4 }
    }
}

/// Labels `texts` through `labeler` and thresholds the result.
///
/// Batches may be sent concurrently; segments keep their input order. An
/// empty input yields an empty policy without contacting the labeler.
pub fn label_policy(
    policy_id: &str,
    version: Version,
    texts: &[String],
    labeler: &dyn Labeler,
    taxonomy: &Taxonomy,
    options: &LabelOptions,
) -> Result<AnnotatedPolicy, AnnotationError> {
    if texts.is_empty() {
        return Ok(AnnotatedPolicy { policy_id: policy_id.to_string(), version, segments: Vec::new() });
    }
    let batch = options.batch_size.unwrap_or(texts.len()).max(1);
    let batches: Vec<&[String]> = texts.chunks(batch).collect();
    type Slot = Mutex<Option<Result<Vec<SegmentLabels>, LabelerError>>>;
    let results: Vec<Slot> = batches.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = options.parallelism.max(1).min(batches.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= batches.len() {
                    break;
                }
                let outcome = labeler.label(batches[i]).and_then(|labels| {
                    if labels.len() != batches[i].len() {
                        return Err(LabelerError::MalformedResponse(format!(
                            "expected {} label sets, got {}",
                            batches[i].len(),
                            labels.len()
                        )));
                    }
                    labels.iter().try_for_each(SegmentLabels::check_range)?;
                    Ok(labels)
                });
                *results[i].lock().unwrap() = Some(outcome);
            });
        }
    });

    let mut segments = Vec::with_capacity(texts.len());
    for cell in results {
        let labels = cell.into_inner().unwrap().expect("every batch is processed")?;
        for l in labels {
            let index = segments.len();
            let segment =
                Segment { index, text: texts[index].clone(), categories: l.categories, attributes: l.attributes };
            segments.push(LabeledSegment::from_segment(&segment, taxonomy)?);
        }
    }
    Ok(AnnotatedPolicy { policy_id: policy_id.to_string(), version, segments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::testserver::serve;
    use std::time::Duration;

    struct Echo;

    impl Labeler for Echo {
        fn label(&self, texts: &[String]) -> Result<Vec<SegmentLabels>, LabelerError> {
            Ok(texts
                .iter()
                .map(|t| {
                    let mut l = SegmentLabels::default();
                    let cat = if t.contains("share") { "third-party" } else { "first-party" };
                    l.categories.insert(cat.into(), 0.9);
                    l
                })
                .collect())
        }
    }

    struct Panicky;

    impl Labeler for Panicky {
        fn label(&self, _: &[String]) -> Result<Vec<SegmentLabels>, LabelerError> {
            panic!("must not be called")
        }
    }

    fn texts(n: usize) -> Vec<String> {
        (0..n)
            .map(|i| if i % 2 == 0 { format!("We collect item {i}.") } else { format!("We share item {i}.") })
            .collect()
    }

    fn quick() -> HttpConfig {
        HttpConfig { timeout: Duration::from_secs(5), retries: 1, backoff: Duration::from_millis(1) }
    }

    #[test]
    fn preserves_cardinality_and_order() {
        let tax = Taxonomy::bundled();
        let opts = LabelOptions { batch_size: Some(2), parallelism: 3 };
        let p = label_policy("p", Version::Pre, &texts(7), &Echo, &tax, &opts).unwrap();
        assert_eq!(p.segments.len(), 7);
        for (i, s) in p.segments.iter().enumerate() {
            assert_eq!(s.index, i);
            assert_eq!(s.text, texts(7)[i]);
            let expected = if i % 2 == 0 { "first-party-collection-use" } else { "third-party-sharing-collection" };
            assert_eq!(s.categories.iter().next().unwrap().as_str(), expected);
        }
    }

    #[test]
    fn empty_input_makes_no_call() {
        let tax = Taxonomy::bundled();
        let p = label_policy("p", Version::Post, &[], &Panicky, &tax, &LabelOptions::default()).unwrap();
        assert!(p.segments.is_empty());
    }

    #[test]
    fn http_round_trip() {
        let server = serve(Box::new(|req| {
            let texts: Vec<String> = serde_json::from_slice(&req.body).unwrap();
            let resp: Vec<serde_json::Value> = texts
                .iter()
                .map(|_| serde_json::json!({"categories": {"data-retention": 0.8}, "attributes": {"purpose": {"unspecified": 0.7}}}))
                .collect();
            (200, serde_json::to_vec(&resp).unwrap())
        }));
        let labeler = HttpLabeler::new(format!("{}/label", server.base), quick());
        let tax = Taxonomy::bundled();
        let p = label_policy("p", Version::Pre, &texts(3), &labeler, &tax, &LabelOptions::default()).unwrap();
        assert_eq!(p.segments.len(), 3);
        assert!(p.segments[2].values("purpose").contains("unspecified"));
        assert_eq!(server.log.lock().unwrap().as_slice(), ["POST /label"]);
    }

    #[test]
    fn probability_above_one_is_malformed() {
        let server = serve(Box::new(|_| (200, br#"[{"categories": {"data-security": 1.2}}]"#.to_vec())));
        let labeler = HttpLabeler::new(server.base.clone(), quick());
        let err = label_policy("p", Version::Pre, &texts(1), &labeler, &Taxonomy::bundled(), &LabelOptions::default())
            .unwrap_err();
        assert!(matches!(err, AnnotationError::Labeler(LabelerError::MalformedResponse(_))), "{err:?}");
    }

    #[test]
    fn wrong_length_is_malformed() {
        let server = serve(Box::new(|_| (200, b"[]".to_vec())));
        let labeler = HttpLabeler::new(server.base.clone(), quick());
        let err = label_policy("p", Version::Pre, &texts(2), &labeler, &Taxonomy::bundled(), &LabelOptions::default())
            .unwrap_err();
        assert!(matches!(err, AnnotationError::Labeler(LabelerError::MalformedResponse(_))));
    }

    #[test]
    fn unreachable_endpoint_after_retries() {
        let server = serve(Box::new(|_| (503, Vec::new())));
        let labeler = HttpLabeler::new(server.base.clone(), quick());
        let err = label_policy("p", Version::Pre, &texts(1), &labeler, &Taxonomy::bundled(), &LabelOptions::default())
            .unwrap_err();
        match err {
            AnnotationError::Labeler(LabelerError::EndpointUnavailable { attempts, .. }) => assert_eq!(attempts, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
