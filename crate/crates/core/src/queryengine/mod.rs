//! Filtering-scoring queries over labeled policy segments.
//!
//! A query selects segments with a predicate and maps the selection to a
//! score. Coverage and compliance queries score 1 when anything matched.
//! Specificity queries score the share of matched segments that name
//! concrete values, or the share of known purposes a policy names. The
//! query definitions live in a TOML catalog; see [`Catalog`].

mod catalog;
mod eval;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::annotation::{annotation_file_name, load_annotations, AnnotatedPolicy, AnnotationError, Version};
use crate::taxonomy::{CategoryId, Taxonomy};

pub use catalog::{AttrValue, AttrValues, Catalog, Predicate, Query, QueryKind, Scorer, ACTION_SOURCES_REF};

/// Scores closer than this are treated as equal when classifying changes.
pub const SCORE_EPSILON: f64 = 1e-9;
/// Decimal places compared by [`disagreement_rate`].
pub const DISAGREEMENT_DECIMALS: i32 = 4;

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("unknown query {0:?}")]
    UnknownQuery(String),
    #[error("{0} is not a {1:?} query")]
    WrongKind(String, QueryKind),
    #[error("query catalog: {0}")]
    Catalog(String),
    #[error("result shapes differ: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
}

/// A query score, or the marker for a ratio query with nothing to measure.
///
/// Serialized as a number or the string `"not-covered"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Score {
    Value(f64),
    NotCovered,
}

impl Score {
    pub fn value(self) -> Option<f64> {
        match self {
            Score::Value(v) => Some(v),
            Score::NotCovered => None,
        }
    }

    /// Binary reading for coverage and compliance scores.
    pub fn is_positive(self) -> bool {
        matches!(self, Score::Value(v) if v > 0.5)
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Score::Value(v) => write!(f, "{v:.4}"),
            Score::NotCovered => f.write_str("not-covered"),
        }
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Score::Value(v) => s.serialize_f64(*v),
            Score::NotCovered => s.serialize_str("not-covered"),
        }
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Score::Value(v)),
            Raw::Text(t) if t == "not-covered" => Ok(Score::NotCovered),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("invalid score {t:?}"))),
        }
    }
}

/// Auxiliary sets behind a specificity score.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aux {
    None,
    /// Indices of matched segments that name no concrete value (S_a).
    Unspecific(BTreeSet<usize>),
    /// Purposes named by the matched segments (P_s).
    Purposes(BTreeSet<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub query_id: String,
    pub score: Score,
    /// Indices of the segments selected by the filter.
    pub matched: BTreeSet<usize>,
    pub aux: Aux,
}

/// Evaluates catalog queries; cheap to share across threads.
#[derive(Debug, Clone)]
pub struct QueryEngine {
    taxonomy: Taxonomy,
    catalog: Catalog,
}

impl QueryEngine {
    /// Engine over the bundled catalog.
    pub fn new(taxonomy: Taxonomy) -> Self {
        let catalog = Catalog::bundled(&taxonomy);
        QueryEngine { taxonomy, catalog }
    }

    pub fn with_catalog(taxonomy: Taxonomy, catalog: Catalog) -> Self {
        QueryEngine { taxonomy, catalog }
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn evaluate(&self, query: &Query, policy: &AnnotatedPolicy) -> QueryResult {
        eval::evaluate(query, &policy.segments, &self.taxonomy)
    }

    /// Every catalog query, in catalog order.
    pub fn evaluate_all(&self, policy: &AnnotatedPolicy) -> Vec<QueryResult> {
        self.catalog.queries().iter().map(|q| self.evaluate(q, policy)).collect()
    }

    /// 1 when some segment carries `category`, else 0.
    pub fn coverage_score(&self, policy: &AnnotatedPolicy, category: &str) -> Result<u8, QueryError> {
        let id: CategoryId = self
            .taxonomy
            .resolve_category(category)
            .ok_or_else(|| QueryError::UnknownCategory(category.to_string()))?;
        Ok(u8::from(policy.segments.iter().any(|s| s.has_category(&id))))
    }

    pub fn ico_query(&self, policy: &AnnotatedPolicy, id: &str) -> Result<QueryResult, QueryError> {
        self.run_kind(policy, id, QueryKind::Compliance)
    }

    pub fn specificity_query(&self, policy: &AnnotatedPolicy, id: &str) -> Result<QueryResult, QueryError> {
        self.run_kind(policy, id, QueryKind::Specificity)
    }

    fn run_kind(&self, policy: &AnnotatedPolicy, id: &str, kind: QueryKind) -> Result<QueryResult, QueryError> {
        let query = self.catalog.get(id)?;
        if query.kind != kind {
            return Err(QueryError::WrongKind(id.to_string(), kind));
        }
        Ok(self.evaluate(query, policy))
    }

    /// Pre/post change records for each pair and each query, ordered by
    /// policy then by the order of `queries`.
    pub fn compare(&self, pairs: &[PolicyPair], queries: &[&Query]) -> Vec<ChangeRecord> {
        let mut records: Vec<ChangeRecord> = pairs
            .par_iter()
            .flat_map_iter(|pair| {
                queries.iter().map(move |q| {
                    let pre = self.evaluate(q, &pair.pre);
                    let post = self.evaluate(q, &pair.post);
                    ChangeRecord::new(&pair.policy_id, q, pre, post)
                })
            })
            .collect();
        records.sort_by(|a, b| a.policy_id.cmp(&b.policy_id));
        records
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComplianceCase {
    Worsened,
    StillMissing,
    StillCovered,
    Improved,
}

impl ComplianceCase {
    pub const ALL: [ComplianceCase; 4] = [
        ComplianceCase::Worsened,
        ComplianceCase::StillMissing,
        ComplianceCase::StillCovered,
        ComplianceCase::Improved,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecificityCase {
    NotCovered,
    SameSpecificity,
    FullySpecified,
    Worse,
    Improved,
}

impl SpecificityCase {
    pub const ALL: [SpecificityCase; 5] = [
        SpecificityCase::NotCovered,
        SpecificityCase::SameSpecificity,
        SpecificityCase::FullySpecified,
        SpecificityCase::Worse,
        SpecificityCase::Improved,
    ];
}

pub fn classify_compliance_change(pre: bool, post: bool) -> ComplianceCase {
    match (pre, post) {
        (true, false) => ComplianceCase::Worsened,
        (false, false) => ComplianceCase::StillMissing,
        (true, true) => ComplianceCase::StillCovered,
        (false, true) => ComplianceCase::Improved,
    }
}

/// Losing all coverage counts as worse and gaining it as improved.
pub fn classify_specificity_change(pre: Score, post: Score) -> SpecificityCase {
    match (pre, post) {
        (Score::NotCovered, Score::NotCovered) => SpecificityCase::NotCovered,
        (Score::Value(_), Score::NotCovered) => SpecificityCase::Worse,
        (Score::NotCovered, Score::Value(_)) => SpecificityCase::Improved,
        (Score::Value(a), Score::Value(b)) if (a - b).abs() <= SCORE_EPSILON => {
            if a >= 1.0 - SCORE_EPSILON {
                SpecificityCase::FullySpecified
            } else {
                SpecificityCase::SameSpecificity
            }
        }
        (Score::Value(a), Score::Value(b)) if b < a => SpecificityCase::Worse,
        _ => SpecificityCase::Improved,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(untagged)]
pub enum ChangeCase {
    Compliance(ComplianceCase),
    Specificity(SpecificityCase),
}

impl ChangeCase {
    pub fn classify(kind: QueryKind, pre: Score, post: Score) -> Self {
        match kind {
            QueryKind::Coverage | QueryKind::Compliance => {
                ChangeCase::Compliance(classify_compliance_change(pre.is_positive(), post.is_positive()))
            }
            QueryKind::Specificity => ChangeCase::Specificity(classify_specificity_change(pre, post)),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ChangeCase::Compliance(c) => match c {
                ComplianceCase::Worsened => "worsened",
                ComplianceCase::StillMissing => "still-missing",
                ComplianceCase::StillCovered => "still-covered",
                ComplianceCase::Improved => "improved",
            },
            ChangeCase::Specificity(c) => match c {
                SpecificityCase::NotCovered => "not-covered",
                SpecificityCase::SameSpecificity => "same-specificity",
                SpecificityCase::FullySpecified => "fully-specified",
                SpecificityCase::Worse => "worse",
                SpecificityCase::Improved => "improved",
            },
        }
    }

    /// Parses a case name; the names overlap, so the query kind decides.
    pub fn parse(kind: QueryKind, name: &str) -> Option<Self> {
        Self::all_for(kind).into_iter().find(|c| c.as_str() == name)
    }

    /// The cases a query of `kind` can fall into, in display order.
    pub fn all_for(kind: QueryKind) -> Vec<ChangeCase> {
        match kind {
            QueryKind::Coverage | QueryKind::Compliance => {
                ComplianceCase::ALL.into_iter().map(ChangeCase::Compliance).collect()
            }
            QueryKind::Specificity => SpecificityCase::ALL.into_iter().map(ChangeCase::Specificity).collect(),
        }
    }
}

impl fmt::Display for ChangeCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The two annotated versions of one policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyPair {
    pub policy_id: String,
    pub pre: AnnotatedPolicy,
    pub post: AnnotatedPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChangeRecord")]
pub struct ChangeRecord {
    pub policy_id: String,
    pub query_id: String,
    pub kind: QueryKind,
    pub pre_score: Score,
    pub post_score: Score,
    pub case: ChangeCase,
    pub matched_pre: BTreeSet<usize>,
    pub matched_post: BTreeSet<usize>,
}

#[derive(Deserialize)]
struct RawChangeRecord {
    policy_id: String,
    query_id: String,
    kind: QueryKind,
    pre_score: Score,
    post_score: Score,
    case: String,
    matched_pre: BTreeSet<usize>,
    matched_post: BTreeSet<usize>,
}

impl TryFrom<RawChangeRecord> for ChangeRecord {
    type Error = String;

    fn try_from(r: RawChangeRecord) -> Result<Self, String> {
        let case =
            ChangeCase::parse(r.kind, &r.case).ok_or_else(|| format!("unknown case {:?} for {:?}", r.case, r.kind))?;
        Ok(ChangeRecord {
            policy_id: r.policy_id,
            query_id: r.query_id,
            kind: r.kind,
            pre_score: r.pre_score,
            post_score: r.post_score,
            case,
            matched_pre: r.matched_pre,
            matched_post: r.matched_post,
        })
    }
}

impl ChangeRecord {
    fn new(policy_id: &str, query: &Query, pre: QueryResult, post: QueryResult) -> Self {
        ChangeRecord {
            policy_id: policy_id.to_string(),
            query_id: query.id.clone(),
            kind: query.kind,
            pre_score: pre.score,
            post_score: post.score,
            case: ChangeCase::classify(query.kind, pre.score, post.score),
            matched_pre: pre.matched,
            matched_post: post.matched,
        }
    }
}

/// Annotation pairs found in a directory of `{policy}.{pre|post}.json` files.
#[derive(Debug, Clone, Default)]
pub struct LoadedPairs {
    pub pairs: Vec<PolicyPair>,
    /// Policies with only one of the two versions.
    pub incomplete: Vec<String>,
}

pub fn load_policy_pairs(dir: impl AsRef<Path>, taxonomy: &Taxonomy) -> Result<LoadedPairs, QueryError> {
    let dir = dir.as_ref();
    let io = |source| AnnotationError::Io { path: dir.display().to_string(), source };
    let mut versions: BTreeMap<String, BTreeSet<Version>> = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let name = entry.map_err(io)?.file_name().to_string_lossy().into_owned();
        let Some(stem) = name.strip_suffix(".json") else { continue };
        let Some((policy, version)) = stem.rsplit_once('.') else { continue };
        if let Ok(v) = version.parse::<Version>() {
            versions.entry(policy.to_string()).or_default().insert(v);
        }
    }
    let mut loaded = LoadedPairs::default();
    for (policy_id, vs) in versions {
        if vs.len() < 2 {
            log::warn!("{policy_id}: only one annotated version; skipped");
            loaded.incomplete.push(policy_id);
            continue;
        }
        let pre = load_annotations(dir.join(annotation_file_name(&policy_id, Version::Pre)), taxonomy)?;
        let post = load_annotations(dir.join(annotation_file_name(&policy_id, Version::Post)), taxonomy)?;
        loaded.pairs.push(PolicyPair { policy_id, pre, post });
    }
    Ok(loaded)
}

/// Query scores keyed by policy, then by query.
pub type ScoreTable = BTreeMap<String, BTreeMap<String, Score>>;

fn scores_differ(a: Score, b: Score) -> bool {
    let scale = 10f64.powi(DISAGREEMENT_DECIMALS);
    match (a, b) {
        (Score::Value(x), Score::Value(y)) => (x * scale).round() != (y * scale).round(),
        (Score::NotCovered, Score::NotCovered) => false,
        _ => true,
    }
}

/// Mean over policies of the share of queries whose scores differ between
/// two result sets of the same shape.
pub fn disagreement_rate(a: &ScoreTable, b: &ScoreTable) -> Result<f64, QueryError> {
    if a.is_empty() {
        return Err(QueryError::ShapeMismatch("no policies".into()));
    }
    if !a.keys().eq(b.keys()) {
        return Err(QueryError::ShapeMismatch("policy sets differ".into()));
    }
    let mut total = 0.0;
    for (policy, qa) in a {
        let qb = &b[policy];
        if qa.is_empty() || !qa.keys().eq(qb.keys()) {
            return Err(QueryError::ShapeMismatch(format!("query sets differ for {policy}")));
        }
        let differing = qa.iter().filter(|(q, &s)| scores_differ(s, qb[*q])).count();
        total += differing as f64 / qa.len() as f64;
    }
    Ok(total / a.len() as f64)
}

/// Score table of one version (`pre` or `post`) taken from change records.
pub fn score_table(records: &[ChangeRecord], version: Version) -> ScoreTable {
    let mut table = ScoreTable::new();
    for r in records {
        let score = match version {
            Version::Pre => r.pre_score,
            Version::Post => r.post_score,
        };
        table.entry(r.policy_id.clone()).or_default().insert(r.query_id.clone(), score);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::LabeledSegment;
    use proptest::prelude::*;

    fn tax() -> Taxonomy {
        Taxonomy::bundled()
    }

    fn seg(index: usize, categories: &[&str], attrs: &[(&str, &[&str])]) -> LabeledSegment {
        let t = tax();
        LabeledSegment {
            index,
            text: format!("segment {index}"),
            categories: categories.iter().map(|c| t.resolve_category(c).unwrap()).collect(),
            attributes: attrs
                .iter()
                .map(|(a, vs)| {
                    let name = t.attribute(a).unwrap().name.clone();
                    let values = vs.iter().map(|v| t.resolve_value(&name, v).unwrap()).collect();
                    (name, values)
                })
                .collect(),
        }
    }

    fn policy(segments: Vec<LabeledSegment>) -> AnnotatedPolicy {
        AnnotatedPolicy { policy_id: "p".into(), version: Version::Pre, segments }
    }

    #[test]
    fn coverage() {
        let engine = QueryEngine::new(tax());
        let p = policy(vec![seg(0, &["data-retention"], &[])]);
        assert_eq!(engine.coverage_score(&p, "data-retention").unwrap(), 1);
        assert_eq!(engine.coverage_score(&p, "Data Security").unwrap(), 0);
        let empty = policy(vec![]);
        for c in engine.taxonomy().categories() {
            assert_eq!(engine.coverage_score(&empty, c.as_str()).unwrap(), 0);
        }
        assert!(matches!(engine.coverage_score(&p, "astrology"), Err(QueryError::UnknownCategory(_))));
    }

    #[test]
    fn ico_q1_requires_a_named_purpose() {
        let engine = QueryEngine::new(tax());
        let named = policy(vec![seg(0, &["first-party"], &[("purpose", &["advertising"])])]);
        assert_eq!(engine.ico_query(&named, "ICO-Q1").unwrap().score, Score::Value(1.0));
        let vague = policy(vec![seg(0, &["first-party"], &[("purpose", &["unspecified"])])]);
        let r = engine.ico_query(&vague, "ICO-Q1").unwrap();
        assert_eq!(r.score, Score::Value(0.0));
        assert!(r.matched.is_empty());
    }

    #[test]
    fn ico_q6_notification() {
        let engine = QueryEngine::new(tax());
        let p = policy(vec![
            seg(0, &["first-party"], &[]),
            seg(
                1,
                &["policy-change"],
                &[("type-of-policy-change", &["privacy-relevant-change"]), ("how-notified", &["personal-notice"])],
            ),
        ]);
        let r = engine.ico_query(&p, "ICO-Q6").unwrap();
        assert_eq!((r.score, r.matched), (Score::Value(1.0), BTreeSet::from([1])));
        let silent =
            policy(vec![seg(0, &["policy-change"], &[("type-of-policy-change", &["privacy-relevant-change"])])]);
        assert_eq!(engine.ico_query(&silent, "ICO-Q6").unwrap().score, Score::Value(0.0));
    }

    #[test]
    fn ico_q4_accepts_either_category_and_alias_spelling() {
        let engine = QueryEngine::new(tax());
        let p = policy(vec![seg(
            3,
            &["user-choice-control"],
            &[("choice-type", &["op-out-link"]), ("choice-scope", &["first-party-use"])],
        )]);
        assert_eq!(engine.ico_query(&p, "ICO-Q4").unwrap().matched, BTreeSet::from([3]));
    }

    #[test]
    fn kind_is_checked() {
        let engine = QueryEngine::new(tax());
        let p = policy(vec![]);
        assert!(matches!(engine.ico_query(&p, "SPEC-Q1"), Err(QueryError::WrongKind(..))));
        assert!(matches!(engine.specificity_query(&p, "SPEC-Q9"), Err(QueryError::UnknownQuery(_))));
        assert!(matches!(engine.ico_query(&p, "ICO-Q8"), Err(QueryError::UnknownQuery(_))));
    }

    #[test]
    fn specific_share_three_of_four() {
        let engine = QueryEngine::new(tax());
        let afp = "action-first-party";
        let p = policy(vec![
            seg(0, &["first-party"], &[(afp, &["collect-on-website"])]),
            seg(1, &["first-party"], &[(afp, &["unspecified"])]),
            seg(2, &["first-party"], &[(afp, &["collect-in-mobile-app", "unspecified"])]),
            seg(3, &["first-party"], &[(afp, &["collect-on-website"])]),
            seg(4, &["first-party"], &[]),
            seg(5, &["third-party"], &[(afp, &["unspecified"])]),
        ]);
        let r = engine.specificity_query(&p, "SPEC-Q1").unwrap();
        assert_eq!(r.matched, BTreeSet::from([0, 1, 2, 3]));
        assert_eq!(r.aux, Aux::Unspecific(BTreeSet::from([1])));
        assert_eq!(r.score, Score::Value(0.75));
    }

    #[test]
    fn purpose_coverage_three_of_nine() {
        let engine = QueryEngine::new(tax());
        assert_eq!(engine.taxonomy().purpose_universe().len(), 9);
        let p = policy(vec![
            seg(0, &["first-party"], &[("purpose", &["advertising", "marketing"])]),
            seg(1, &["first-party"], &[("purpose", &["analytics-research", "other", "unspecified"])]),
            seg(2, &["third-party"], &[("purpose", &["legal-requirement"])]),
        ]);
        let r = engine.specificity_query(&p, "SPEC-Q6").unwrap();
        let Score::Value(v) = r.score else { panic!() };
        assert!((v - 3.0 / 9.0).abs() < 1e-12);
        let Aux::Purposes(ps) = r.aux else { panic!() };
        assert_eq!(ps.len(), 3);
        let vague = policy(vec![seg(0, &["first-party"], &[("purpose", &["unspecified"])])]);
        assert_eq!(engine.specificity_query(&vague, "SPEC-Q6").unwrap().score, Score::NotCovered);
    }

    #[test]
    fn q5_counts_silent_segments() {
        let engine = QueryEngine::new(tax());
        let tpe = "third-party-entity";
        let p = policy(vec![
            seg(0, &["third-party"], &[(tpe, &["named-third-party"])]),
            seg(1, &["third-party"], &[]),
            seg(2, &["third-party"], &[(tpe, &["unspecified"])]),
            seg(3, &["third-party"], &[(tpe, &["unnamed-third-party", "unspecified"])]),
        ]);
        let r = engine.specificity_query(&p, "SPEC-Q5").unwrap();
        assert_eq!(r.aux, Aux::Unspecific(BTreeSet::from([1, 2])));
        assert_eq!(r.score, Score::Value(0.5));
    }

    #[test]
    fn q8_half_unspecified() {
        let engine = QueryEngine::new(tax());
        let p = policy(vec![
            seg(0, &["data-retention"], &[("purpose", &["legal-requirement"])]),
            seg(1, &["data-retention"], &[("purpose", &["unspecified"])]),
        ]);
        assert_eq!(engine.specificity_query(&p, "SPEC-Q8").unwrap().score, Score::Value(0.5));
        assert_eq!(engine.specificity_query(&policy(vec![]), "SPEC-Q8").unwrap().score, Score::NotCovered);
    }

    #[test]
    fn compliance_cases_are_a_bijection() {
        let mut seen = BTreeSet::new();
        for pre in [false, true] {
            for post in [false, true] {
                seen.insert(classify_compliance_change(pre, post));
            }
        }
        assert_eq!(seen.len(), 4);
        assert_eq!(classify_compliance_change(true, false), ComplianceCase::Worsened);
        assert_eq!(classify_compliance_change(false, true), ComplianceCase::Improved);
    }

    #[test]
    fn specificity_cases() {
        use Score::{NotCovered as N, Value as V};
        assert_eq!(classify_specificity_change(V(0.6), V(0.6)), SpecificityCase::SameSpecificity);
        assert_eq!(classify_specificity_change(V(1.0), V(1.0)), SpecificityCase::FullySpecified);
        assert_eq!(classify_specificity_change(N, V(0.8)), SpecificityCase::Improved);
        assert_eq!(classify_specificity_change(V(0.8), N), SpecificityCase::Worse);
        assert_eq!(classify_specificity_change(N, N), SpecificityCase::NotCovered);
        assert_eq!(classify_specificity_change(V(0.5), V(0.25)), SpecificityCase::Worse);
        assert_eq!(classify_specificity_change(V(0.0), V(0.0)), SpecificityCase::SameSpecificity);
        assert_eq!(
            classify_specificity_change(V(1.0 / 3.0), V(0.1 + 0.2 + 1.0 / 3.0 - 0.3)),
            SpecificityCase::SameSpecificity
        );
    }

    #[test]
    fn score_serde() {
        let json = serde_json::to_string(&[Score::Value(0.75), Score::NotCovered]).unwrap();
        assert_eq!(json, r#"[0.75,"not-covered"]"#);
        let back: Vec<Score> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, [Score::Value(0.75), Score::NotCovered]);
        assert!(serde_json::from_str::<Score>(r#""covered""#).is_err());
        assert_eq!(
            serde_json::to_string(&ChangeCase::Compliance(ComplianceCase::StillMissing)).unwrap(),
            r#""still-missing""#
        );
    }

    #[test]
    fn change_record_round_trip() {
        let engine = QueryEngine::new(tax());
        let pre = policy(vec![seg(0, &["third-party"], &[("third-party-entity", &["unspecified"])])]);
        let post = policy(vec![seg(0, &["third-party"], &[("third-party-entity", &["named-third-party"])])]);
        let pair = PolicyPair { policy_id: "p".into(), pre, post };
        let queries = engine.catalog().select("COV-2,SPEC-Q5").unwrap();
        let records = engine.compare(&[pair], &queries);
        assert_eq!(records[0].case, ChangeCase::Compliance(ComplianceCase::StillCovered));
        assert_eq!(records[1].case, ChangeCase::Specificity(SpecificityCase::Improved));
        let json = serde_json::to_string(&records).unwrap();
        let back: Vec<ChangeRecord> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, records);
        let bad = json.replace("still-covered", "fully-specified");
        assert!(serde_json::from_str::<Vec<ChangeRecord>>(&bad).is_err());
    }

    fn table(rows: &[(&str, &[(&str, Score)])]) -> ScoreTable {
        rows.iter().map(|(p, qs)| (p.to_string(), qs.iter().map(|(q, s)| (q.to_string(), *s)).collect())).collect()
    }

    #[test]
    fn disagreement() {
        use Score::{NotCovered as N, Value as V};
        let ids: Vec<String> = (0..10).map(|i| format!("Q{i}")).collect();
        let a: ScoreTable = [("p".to_string(), ids.iter().map(|q| (q.clone(), V(1.0))).collect())].into();
        let mut b = a.clone();
        assert_eq!(disagreement_rate(&a, &b).unwrap(), 0.0);
        b.get_mut("p").unwrap().insert("Q3".into(), V(0.0));
        assert!((disagreement_rate(&a, &b).unwrap() - 0.1).abs() < 1e-12);

        let x = table(&[("p", &[("S", V(0.33333))]), ("q", &[("S", N)])]);
        let y = table(&[("p", &[("S", V(0.333334))]), ("q", &[("S", V(0.0))])]);
        assert_eq!(disagreement_rate(&x, &y).unwrap(), 0.5);

        let z = table(&[("p", &[("S", V(0.5))])]);
        assert!(matches!(disagreement_rate(&x, &z), Err(QueryError::ShapeMismatch(_))));
        let w = table(&[("p", &[("T", V(0.5))]), ("q", &[("S", N)])]);
        assert!(matches!(disagreement_rate(&x, &w), Err(QueryError::ShapeMismatch(_))));
        assert!(disagreement_rate(&ScoreTable::new(), &ScoreTable::new()).is_err());
    }

    fn arb_segment() -> impl Strategy<Value = LabeledSegment> {
        let t = tax();
        let cats: Vec<String> = t.categories().iter().map(|c| c.as_str().to_string()).collect();
        let attrs: Vec<(String, Vec<String>)> = t
            .attributes()
            .map(|a| {
                let mut vs = a.values.clone();
                if a.has_unspecified {
                    vs.push(crate::taxonomy::UNSPECIFIED.into());
                }
                (a.name.clone(), vs)
            })
            .collect();
        let cat_sets = proptest::sample::subsequence(cats, 0..=3);
        let attr_sets = proptest::collection::vec((0..attrs.len(), proptest::collection::vec(0usize..32, 0..3)), 0..4);
        (cat_sets, attr_sets).prop_map(move |(cs, picks)| {
            let mut attributes: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
            for (ai, vis) in picks {
                let (name, values) = &attrs[ai];
                for vi in vis {
                    attributes.entry(name.clone()).or_default().insert(values[vi % values.len()].clone());
                }
            }
            LabeledSegment {
                index: 0,
                text: "x".into(),
                categories: cs.iter().map(|c| CategoryId::new(c)).collect(),
                attributes,
            }
        })
    }

    fn indexed(mut segs: Vec<LabeledSegment>) -> AnnotatedPolicy {
        for (i, s) in segs.iter_mut().enumerate() {
            s.index = i;
        }
        policy(segs)
    }

    proptest! {
        #[test]
        fn adding_a_segment_never_lowers_binary_scores(
            segs in proptest::collection::vec(arb_segment(), 0..12),
            extra in arb_segment(),
        ) {
            let engine = QueryEngine::new(tax());
            let before = indexed(segs.clone());
            let mut grown = segs;
            grown.push(extra);
            let after = indexed(grown);
            for q in engine.catalog().queries() {
                let (a, b) = (engine.evaluate(q, &before), engine.evaluate(q, &after));
                prop_assert!(a.matched.is_subset(&b.matched));
                match q.kind {
                    QueryKind::Coverage | QueryKind::Compliance => {
                        let (Score::Value(x), Score::Value(y)) = (a.score, b.score) else { panic!() };
                        prop_assert!(x == 0.0 || x == 1.0);
                        prop_assert!(y >= x);
                    }
                    QueryKind::Specificity => {
                        if let Score::Value(v) = b.score {
                            prop_assert!((0.0..=1.0).contains(&v));
                        }
                        if let Aux::Unspecific(s_a) = &b.aux {
                            prop_assert!(s_a.is_subset(&b.matched));
                            if let Score::Value(v) = b.score {
                                let expect = 1.0 - s_a.len() as f64 / b.matched.len() as f64;
                                prop_assert_eq!(v, expect);
                            }
                        }
                        if !b.matched.contains(&(after.segments.len() - 1)) {
                            prop_assert_eq!(a.score, b.score);
                        }
                        if matches!(q.scorer, Scorer::PurposeCoverage) {
                            let (x, y) = (a.score.value().unwrap_or(0.0), b.score.value().unwrap_or(0.0));
                            prop_assert!(y >= x);
                        }
                    }
                }
            }
        }

        #[test]
        fn specificity_classification_is_total(a in 0u8..6, b in 0u8..6) {
            let s = |i: u8| if i == 5 { Score::NotCovered } else { Score::Value(f64::from(i) * 0.25) };
            let case = classify_specificity_change(s(a), s(b));
            prop_assert!(SpecificityCase::ALL.contains(&case));
        }
    }
}
