use std::collections::BTreeSet;

use super::catalog::{Predicate, Query, Scorer};
use super::{Aux, QueryResult, Score};
use crate::annotation::LabeledSegment;
use crate::taxonomy::Taxonomy;

pub(crate) fn matches(p: &Predicate, s: &LabeledSegment) -> bool {
    match p {
        Predicate::Category(c) => s.categories.iter().any(|x| x.as_str() == c),
        Predicate::AnyCategory(cs) => s.categories.iter().any(|x| cs.iter().any(|c| x.as_str() == c)),
        Predicate::NonEmpty(a) => !s.values(a).is_empty(),
        Predicate::Empty(a) => s.values(a).is_empty(),
        Predicate::Includes(av) => s.values(&av.attribute).contains(&av.value),
        Predicate::Excludes(av) => !s.values(&av.attribute).contains(&av.value),
        Predicate::Intersects(av) => {
            let have = s.values(&av.attribute);
            av.values.iter().any(|v| have.contains(v))
        }
        // Compiled value lists are sorted and deduplicated, like the label set.
        Predicate::Only(av) => s.values(&av.attribute).iter().eq(av.values.iter()),
        Predicate::All(ps) => ps.iter().all(|q| matches(q, s)),
        Predicate::Any(ps) => ps.iter().any(|q| matches(q, s)),
        Predicate::Not(q) => !matches(q, s),
    }
}

pub(crate) fn evaluate(query: &Query, segments: &[LabeledSegment], taxonomy: &Taxonomy) -> QueryResult {
    let selected: Vec<&LabeledSegment> = segments.iter().filter(|s| matches(&query.filter, s)).collect();
    let matched: BTreeSet<usize> = selected.iter().map(|s| s.index).collect();
    let (score, aux) = match &query.scorer {
        Scorer::Exists => (Score::Value(if selected.is_empty() { 0.0 } else { 1.0 }), Aux::None),
        Scorer::SpecificShare { unspecific } => {
            let s_a: BTreeSet<usize> = selected.iter().filter(|s| matches(unspecific, s)).map(|s| s.index).collect();
            let score = if selected.is_empty() {
                Score::NotCovered
            } else {
                Score::Value(1.0 - s_a.len() as f64 / selected.len() as f64)
            };
            (score, Aux::Unspecific(s_a))
        }
        Scorer::PurposeCoverage => {
            let universe = taxonomy.purpose_universe();
            let p_s: BTreeSet<String> = universe
                .iter()
                .filter(|p| selected.iter().any(|s| s.values("purpose").contains(*p)))
                .cloned()
                .collect();
            let score =
                if p_s.is_empty() { Score::NotCovered } else { Score::Value(p_s.len() as f64 / universe.len() as f64) };
            (score, Aux::Purposes(p_s))
        }
    };
    QueryResult { query_id: query.id.clone(), score, matched, aux }
}
