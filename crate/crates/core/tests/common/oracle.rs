//! Brute-force query evaluator written straight from the set definitions,
//! sharing no code with the catalog or the engine.

use std::collections::BTreeSet;

use polidiff::annotation::LabeledSegment;
use polidiff::queryengine::Score;

const FIRST: &str = "first-party-collection-use";
const THIRD: &str = "third-party-sharing-collection";

const S_ACTIONS: [&str; 5] = [
    "collect-from-user-on-other-websites",
    "receive-from-other-parts-of-company-affiliates",
    "receive-from-other-service-third-party-named",
    "receive-from-other-service-third-party-unnamed",
    "track-user-on-other-websites",
];

const PURPOSES: [&str; 9] = [
    "additional-service-feature",
    "advertising",
    "analytics-research",
    "basic-service-feature",
    "legal-requirement",
    "marketing",
    "merger-acquisition",
    "personalization-customization",
    "service-operation-and-security",
];

const COVERAGE: [&str; 9] = [
    FIRST,
    THIRD,
    "user-choice-control",
    "international-specific-audiences",
    "data-security",
    "user-access-edit-deletion",
    "data-retention",
    "policy-change",
    "privacy-contact-information",
];

fn cat(s: &LabeledSegment, c: &str) -> bool {
    s.categories.iter().any(|x| x.as_str() == c)
}

fn vals(s: &LabeledSegment, a: &str) -> BTreeSet<String> {
    s.attributes.get(a).cloned().unwrap_or_default()
}

fn has(s: &LabeledSegment, a: &str, v: &str) -> bool {
    vals(s, a).contains(v)
}

fn only_unspecified(s: &LabeledSegment, a: &str) -> bool {
    vals(s, a) == BTreeSet::from(["unspecified".to_string()])
}

fn exists(segs: &[LabeledSegment], f: impl Fn(&LabeledSegment) -> bool) -> (Score, BTreeSet<usize>) {
    let matched: BTreeSet<usize> = segs.iter().filter(|s| f(s)).map(|s| s.index).collect();
    (Score::Value(if matched.is_empty() { 0.0 } else { 1.0 }), matched)
}

fn ratio(
    segs: &[LabeledSegment],
    in_s: impl Fn(&LabeledSegment) -> bool,
    in_s_a: impl Fn(&LabeledSegment) -> bool,
) -> (Score, BTreeSet<usize>) {
    let mut s = BTreeSet::new();
    let mut s_a = BTreeSet::new();
    for seg in segs {
        if in_s(seg) {
            s.insert(seg.index);
            if in_s_a(seg) {
                s_a.insert(seg.index);
            }
        }
    }
    if s.is_empty() {
        return (Score::NotCovered, s);
    }
    (Score::Value(1.0 - s_a.len() as f64 / s.len() as f64), s)
}

fn purposes(segs: &[LabeledSegment], category: &str) -> (Score, BTreeSet<usize>) {
    let matched: BTreeSet<usize> = segs.iter().filter(|s| cat(s, category)).map(|s| s.index).collect();
    let p_s = PURPOSES.iter().filter(|p| segs.iter().any(|s| cat(s, category) && has(s, "purpose", p))).count();
    if p_s == 0 {
        return (Score::NotCovered, matched);
    }
    (Score::Value(p_s as f64 / PURPOSES.len() as f64), matched)
}

/// Score and matched set of one of the 24 queries.
pub fn evaluate(id: &str, segs: &[LabeledSegment]) -> (Score, BTreeSet<usize>) {
    if let Some(n) = id.strip_prefix("COV-") {
        let c = COVERAGE[n.parse::<usize>().unwrap() - 1];
        return exists(segs, |s| cat(s, c));
    }
    match id {
        "ICO-Q1" => {
            exists(segs, |s| cat(s, FIRST) && !vals(s, "purpose").is_empty() && !has(s, "purpose", "unspecified"))
        }
        "ICO-Q2" => exists(segs, |s| {
            cat(s, FIRST)
                && S_ACTIONS.iter().any(|a| has(s, "action-first-party", a))
                && !has(s, "info-type", "unspecified")
        }),
        "ICO-Q3" => exists(segs, |s| {
            cat(s, THIRD) && !vals(s, "third-party-entity").is_empty() && !has(s, "third-party-entity", "unspecified")
        }),
        "ICO-Q4" => exists(segs, |s| {
            (cat(s, FIRST) || cat(s, "user-choice-control"))
                && (has(s, "choice-type", "opt-out-link") || has(s, "choice-type", "opt-out-via-contacting-company"))
                && has(s, "choice-scope", "first-party-use")
        }),
        "ICO-Q5" => exists(segs, |s| cat(s, FIRST) && S_ACTIONS.iter().any(|a| has(s, "action-first-party", a))),
        "ICO-Q6" => exists(segs, |s| {
            cat(s, "policy-change")
                && has(s, "type-of-policy-change", "privacy-relevant-change")
                && !has(s, "how-notified", "unspecified")
                && !vals(s, "how-notified").is_empty()
        }),
        "ICO-Q7" => exists(segs, |s| {
            cat(s, "user-access-edit-deletion")
                && ["view", "export", "edit-information"].iter().any(|v| has(s, "access-type", v))
        }),
        "SPEC-Q1" => ratio(
            segs,
            |s| cat(s, FIRST) && !vals(s, "action-first-party").is_empty(),
            |s| only_unspecified(s, "action-first-party"),
        ),
        "SPEC-Q2" => ratio(
            segs,
            |s| cat(s, THIRD) && !vals(s, "action-third-party").is_empty(),
            |s| only_unspecified(s, "action-third-party"),
        ),
        "SPEC-Q3" => {
            ratio(segs, |s| cat(s, FIRST) && !vals(s, "info-type").is_empty(), |s| only_unspecified(s, "info-type"))
        }
        "SPEC-Q4" => {
            ratio(segs, |s| cat(s, THIRD) && !vals(s, "info-type").is_empty(), |s| only_unspecified(s, "info-type"))
        }
        "SPEC-Q5" => ratio(
            segs,
            |s| cat(s, THIRD),
            |s| only_unspecified(s, "third-party-entity") || vals(s, "third-party-entity").is_empty(),
        ),
        "SPEC-Q6" => purposes(segs, FIRST),
        "SPEC-Q7" => purposes(segs, THIRD),
        "SPEC-Q8" => ratio(
            segs,
            |s| cat(s, "data-retention") && !vals(s, "purpose").is_empty(),
            |s| only_unspecified(s, "purpose"),
        ),
        other => panic!("oracle has no query {other}"),
    }
}

pub const QUERY_IDS: [&str; 24] = [
    "COV-1", "COV-2", "COV-3", "COV-4", "COV-5", "COV-6", "COV-7", "COV-8", "COV-9", "ICO-Q1", "ICO-Q2", "ICO-Q3",
    "ICO-Q4", "ICO-Q5", "ICO-Q6", "ICO-Q7", "SPEC-Q1", "SPEC-Q2", "SPEC-Q3", "SPEC-Q4", "SPEC-Q5", "SPEC-Q6",
    "SPEC-Q7", "SPEC-Q8",
];
