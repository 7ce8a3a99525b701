use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::QueryError;
use crate::taxonomy::{CategoryId, Taxonomy, UNSPECIFIED};

/// Placeholder in value lists for the taxonomy's action sources.
pub const ACTION_SOURCES_REF: &str = "$action_sources";

const BUNDLED: &str = include_str!("../../data/queries.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Coverage,
    Compliance,
    Specificity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttrValue {
    pub attribute: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttrValues {
    pub attribute: String,
    pub values: Vec<String>,
}

/// Segment filter. After compilation every name is canonical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Category(String),
    AnyCategory(Vec<String>),
    NonEmpty(String),
    Empty(String),
    Includes(AttrValue),
    Excludes(AttrValue),
    Intersects(AttrValues),
    Only(AttrValues),
    All(Vec<Predicate>),
    Any(Vec<Predicate>),
    Not(Box<Predicate>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scorer {
    /// 1 when at least one segment matched.
    Exists,
    /// `1 - |S_a| / |S|` where S_a are the matched segments satisfying
    /// `unspecific`.
    SpecificShare { unspecific: Predicate },
    /// Share of the purpose universe named by the matched segments.
    PurposeCoverage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Query {
    pub id: String,
    pub kind: QueryKind,
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    pub filter: Predicate,
    pub scorer: Scorer,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    query: Vec<Query>,
}

/// Validated queries in catalog order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Catalog {
    queries: Vec<Query>,
}

impl Catalog {
    pub fn bundled(taxonomy: &Taxonomy) -> Self {
        Self::from_toml_str(BUNDLED, taxonomy).expect("bundled catalog is valid")
    }

    pub fn load(path: impl AsRef<Path>, taxonomy: &Taxonomy) -> Result<Self, QueryError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| QueryError::Catalog(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, taxonomy)
    }

    /// Parses a catalog and resolves every name against `taxonomy`.
    pub fn from_toml_str(text: &str, taxonomy: &Taxonomy) -> Result<Self, QueryError> {
        let file: CatalogFile = toml::from_str(text).map_err(|e| QueryError::Catalog(e.to_string()))?;
        let mut seen = BTreeSet::new();
        let mut queries = Vec::with_capacity(file.query.len());
        for mut q in file.query {
            if !seen.insert(q.id.clone()) {
                return Err(QueryError::Catalog(format!("duplicate query id {}", q.id)));
            }
            let ctx = |e: QueryError| QueryError::Catalog(format!("{}: {e}", q.id));
            compile(&mut q.filter, taxonomy).map_err(ctx)?;
            match &mut q.scorer {
                Scorer::Exists | Scorer::PurposeCoverage => {}
                Scorer::SpecificShare { unspecific } => compile(unspecific, taxonomy).map_err(ctx)?,
            }
            let scorer_fits = match q.kind {
                QueryKind::Coverage | QueryKind::Compliance => q.scorer == Scorer::Exists,
                QueryKind::Specificity => q.scorer != Scorer::Exists,
            };
            if !scorer_fits {
                return Err(QueryError::Catalog(format!("{}: scorer does not fit a {:?} query", q.id, q.kind)));
            }
            queries.push(q);
        }
        Ok(Catalog { queries })
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn get(&self, id: &str) -> Result<&Query, QueryError> {
        self.queries.iter().find(|q| q.id == id).ok_or_else(|| QueryError::UnknownQuery(id.to_string()))
    }

    pub fn of_kind(&self, kind: QueryKind) -> impl Iterator<Item = &Query> {
        self.queries.iter().filter(move |q| q.kind == kind)
    }

    /// Queries selected by a CLI-style spec: `all`, `cov`, `ico`, `spec`, or
    /// a comma-separated list of ids.
    pub fn select(&self, spec: &str) -> Result<Vec<&Query>, QueryError> {
        match spec {
            "all" => Ok(self.queries.iter().collect()),
            "cov" => Ok(self.of_kind(QueryKind::Coverage).collect()),
            "ico" => Ok(self.of_kind(QueryKind::Compliance).collect()),
            "spec" => Ok(self.of_kind(QueryKind::Specificity).collect()),
            ids => ids.split(',').map(|id| self.get(id.trim())).collect(),
        }
    }
}

fn resolve_category(taxonomy: &Taxonomy, raw: &str) -> Result<CategoryId, QueryError> {
    taxonomy.resolve_category(raw).ok_or_else(|| QueryError::UnknownCategory(raw.to_string()))
}

fn check_attribute(taxonomy: &Taxonomy, attribute: &mut String) -> Result<(), QueryError> {
    let attr = taxonomy
        .attribute(&crate::taxonomy::normalize_id(attribute))
        .ok_or_else(|| QueryError::Catalog(format!("unknown attribute {attribute}")))?;
    *attribute = attr.name.clone();
    Ok(())
}

fn resolve_value(taxonomy: &Taxonomy, attribute: &str, raw: &str) -> Result<String, QueryError> {
    if raw == UNSPECIFIED {
        let has = taxonomy.attribute(attribute).is_some_and(|a| a.has_unspecified);
        return if has {
            Ok(UNSPECIFIED.to_string())
        } else {
            Err(QueryError::Catalog(format!("{attribute} has no unspecified value")))
        };
    }
    taxonomy
        .resolve_value(attribute, raw)
        .ok_or_else(|| QueryError::Catalog(format!("unknown value {raw} for {attribute}")))
}

fn resolve_values(taxonomy: &Taxonomy, av: &mut AttrValues) -> Result<(), QueryError> {
    check_attribute(taxonomy, &mut av.attribute)?;
    let mut out = Vec::new();
    for v in &av.values {
        if v == ACTION_SOURCES_REF {
            out.extend(taxonomy.action_sources().iter().cloned());
        } else {
            out.push(resolve_value(taxonomy, &av.attribute, v)?);
        }
    }
    out.sort();
    out.dedup();
    av.values = out;
    Ok(())
}

fn compile(p: &mut Predicate, taxonomy: &Taxonomy) -> Result<(), QueryError> {
    match p {
        Predicate::Category(c) => *c = resolve_category(taxonomy, c)?.as_str().to_string(),
        Predicate::AnyCategory(cs) => {
            for c in cs.iter_mut() {
                *c = resolve_category(taxonomy, c)?.as_str().to_string();
            }
        }
        Predicate::NonEmpty(a) | Predicate::Empty(a) => check_attribute(taxonomy, a)?,
        Predicate::Includes(av) | Predicate::Excludes(av) => {
            check_attribute(taxonomy, &mut av.attribute)?;
            av.value = resolve_value(taxonomy, &av.attribute, &av.value)?;
        }
        Predicate::Intersects(av) | Predicate::Only(av) => resolve_values(taxonomy, av)?,
        Predicate::All(ps) | Predicate::Any(ps) => {
            for q in ps.iter_mut() {
                compile(q, taxonomy)?;
            }
        }
        Predicate::Not(q) => compile(q, taxonomy)?,
    }
    Ok(())
}
