//! The label universe: high-level categories, lower-level attributes and
//! their value enumerations.
//!
//! All identifiers go through [`normalize_id`] so that display names such as
//! `"First Party Collection/Use"` and slugs such as `first-party-collection-use`
//! refer to the same label.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sentinel value carried by attributes whose value was not stated.
pub const UNSPECIFIED: &str = "unspecified";

/// The nine high-level categories every taxonomy must declare.
pub const CANONICAL_CATEGORIES: [&str; 9] = [
    "first-party-collection-use",
    "third-party-sharing-collection",
    "user-choice-control",
    "international-specific-audiences",
    "data-security",
    "user-access-edit-deletion",
    "data-retention",
    "policy-change",
    "privacy-contact-information",
];

/// Attributes referenced by the built-in query catalog.
pub const REQUIRED_ATTRIBUTES: [&str; 10] = [
    "purpose",
    "info-type",
    "action-first-party",
    "action-third-party",
    "third-party-entity",
    "choice-type",
    "choice-scope",
    "access-type",
    "type-of-policy-change",
    "how-notified",
];

/// Values of `action-first-party` meaning the data did not come directly
/// from the user.
pub const ACTION_SOURCES: [&str; 5] = [
    "collect-from-user-on-other-websites",
    "receive-from-other-parts-of-company-affiliates",
    "receive-from-other-service-third-party-named",
    "receive-from-other-service-third-party-unnamed",
    "track-user-on-other-websites",
];

const DEFAULT_TAXONOMY: &str = include_str!("../data/taxonomy.toml");

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("failed to read taxonomy {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed taxonomy document: {0}")]
    Parse(String),
    #[error("missing category: {0}")]
    MissingCategory(String),
    #[error("missing attribute: {0}")]
    MissingAttribute(String),
    #[error("duplicate value {value:?} in {scope}")]
    DuplicateValue { scope: String, value: String },
    #[error("invalid taxonomy: {0}")]
    Invalid(String),
}

/// Canonical form of a label identifier: lowercase, with every run of
/// non-alphanumeric characters replaced by a single hyphen.
pub fn normalize_id(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_hyphen = false;
    for c in raw.chars() {
        if c.is_alphanumeric() {
            if pending_hyphen && !out.is_empty() {
                out.push('-');
            }
            pending_hyphen = false;
            out.extend(c.to_lowercase());
        } else {
            pending_hyphen = true;
        }
    }
    out
}

/// A high-level privacy category in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategoryId(String);

impl CategoryId {
    pub fn new(name: &str) -> Self {
        CategoryId(normalize_id(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CategoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub values: Vec<String>,
    pub has_unspecified: bool,
}

impl Attribute {
    pub fn contains(&self, value: &str) -> bool {
        (self.has_unspecified && value == UNSPECIFIED) || self.values.iter().any(|v| v == value)
    }
}

/// On-disk shape of a taxonomy document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaxonomyConfig {
    categories: Vec<String>,
    purpose_universe: Vec<String>,
    #[serde(default)]
    action_sources: Option<Vec<String>>,
    #[serde(default)]
    category_aliases: BTreeMap<String, String>,
    #[serde(default)]
    value_aliases: BTreeMap<String, String>,
    attributes: BTreeMap<String, AttributeConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributeConfig {
    values: Vec<String>,
    #[serde(default)]
    has_unspecified: bool,
}

/// A validated, immutable label universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    categories: Vec<CategoryId>,
    attributes: BTreeMap<String, Attribute>,
    purpose_universe: Vec<String>,
    action_sources: Vec<String>,
    category_aliases: BTreeMap<String, CategoryId>,
    value_aliases: BTreeMap<String, String>,
}

impl Taxonomy {
    /// The taxonomy shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_toml_str(DEFAULT_TAXONOMY).expect("bundled taxonomy is valid")
    }

    pub fn from_toml_str(doc: &str) -> Result<Self, TaxonomyError> {
        let config: TaxonomyConfig = toml::from_str(doc).map_err(|e| TaxonomyError::Parse(e.to_string()))?;
        Self::from_config(config)
    }

    fn from_config(config: TaxonomyConfig) -> Result<Self, TaxonomyError> {
        let mut categories = Vec::new();
        let mut seen = BTreeSet::new();
        for raw in &config.categories {
            let id = CategoryId::new(raw);
            if !seen.insert(id.clone()) {
                return Err(TaxonomyError::DuplicateValue { scope: "categories".into(), value: id.0 });
            }
            if !CANONICAL_CATEGORIES.contains(&id.as_str()) {
                return Err(TaxonomyError::Invalid(format!(
                    "unexpected category {id:?}; exactly the nine canonical categories are allowed"
                )));
            }
            categories.push(id);
        }
        for canonical in CANONICAL_CATEGORIES {
            if !seen.contains(&CategoryId::new(canonical)) {
                return Err(TaxonomyError::MissingCategory(canonical.to_string()));
            }
        }

        let mut attributes = BTreeMap::new();
        for (raw_name, attr) in &config.attributes {
            let name = normalize_id(raw_name);
            let mut values = Vec::with_capacity(attr.values.len());
            let mut seen = BTreeSet::new();
            for raw in &attr.values {
                let value = normalize_id(raw);
                if value == UNSPECIFIED {
                    return Err(TaxonomyError::Invalid(format!(
                        "attribute {name}: declare the sentinel with has_unspecified, not as a value"
                    )));
                }
                if !seen.insert(value.clone()) {
                    return Err(TaxonomyError::DuplicateValue { scope: format!("attribute {name}"), value });
                }
                values.push(value);
            }
            let attribute = Attribute { name: name.clone(), values, has_unspecified: attr.has_unspecified };
            if attributes.insert(name.clone(), attribute).is_some() {
                return Err(TaxonomyError::DuplicateValue { scope: "attributes".into(), value: name });
            }
        }
        for required in REQUIRED_ATTRIBUTES {
            if !attributes.contains_key(required) {
                return Err(TaxonomyError::MissingAttribute(required.to_string()));
            }
        }

        let purpose = &attributes["purpose"];
        let mut purpose_universe = Vec::new();
        let mut seen = BTreeSet::new();
        for raw in &config.purpose_universe {
            let value = normalize_id(raw);
            if value == UNSPECIFIED {
                return Err(TaxonomyError::Invalid(
                    "purpose_universe must not contain the unspecified sentinel".into(),
                ));
            }
            if !purpose.values.contains(&value) {
                return Err(TaxonomyError::Invalid(format!("purpose_universe entry {value:?} is not a purpose value")));
            }
            if !seen.insert(value.clone()) {
                return Err(TaxonomyError::DuplicateValue { scope: "purpose_universe".into(), value });
            }
            purpose_universe.push(value);
        }
        if purpose_universe.is_empty() {
            return Err(TaxonomyError::Invalid("purpose_universe is empty".into()));
        }

        let action_sources: Vec<String> = match &config.action_sources {
            Some(list) => list.iter().map(|v| normalize_id(v)).collect(),
            None => ACTION_SOURCES.iter().map(|s| s.to_string()).collect(),
        };
        let declared: BTreeSet<&str> = action_sources.iter().map(String::as_str).collect();
        let canonical: BTreeSet<&str> = ACTION_SOURCES.into_iter().collect();
        if declared != canonical || declared.len() != action_sources.len() {
            return Err(TaxonomyError::Invalid(format!("action_sources must be exactly {ACTION_SOURCES:?}")));
        }
        let first_party_actions = &attributes["action-first-party"];
        for value in &action_sources {
            if !first_party_actions.values.contains(value) {
                return Err(TaxonomyError::Invalid(format!(
                    "action source {value:?} is not an action-first-party value"
                )));
            }
        }

        let mut category_aliases = BTreeMap::new();
        for (alias, target) in &config.category_aliases {
            let target = CategoryId::new(target);
            if !seen_category(&categories, &target) {
                return Err(TaxonomyError::Invalid(format!(
                    "category alias {alias:?} points at unknown category {target}"
                )));
            }
            category_aliases.insert(normalize_id(alias), target);
        }
        let value_aliases = config.value_aliases.iter().map(|(k, v)| (normalize_id(k), normalize_id(v))).collect();

        Ok(Taxonomy { categories, attributes, purpose_universe, action_sources, category_aliases, value_aliases })
    }

    /// Serializes back into the document format accepted by [`load_taxonomy`].
    pub fn to_toml_string(&self) -> String {
        let config = TaxonomyConfig {
            categories: self.categories.iter().map(|c| c.0.clone()).collect(),
            purpose_universe: self.purpose_universe.clone(),
            action_sources: Some(self.action_sources.clone()),
            category_aliases: self.category_aliases.iter().map(|(k, v)| (k.clone(), v.0.clone())).collect(),
            value_aliases: self.value_aliases.clone(),
            attributes: self
                .attributes
                .values()
                .map(|a| {
                    (a.name.clone(), AttributeConfig { values: a.values.clone(), has_unspecified: a.has_unspecified })
                })
                .collect(),
        };
        toml::to_string(&config).expect("taxonomy config serializes")
    }

    pub fn categories(&self) -> &[CategoryId] {
        &self.categories
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.get(&normalize_id(name))
    }

    pub fn attributes(&self) -> impl Iterator<Item = &Attribute> {
        self.attributes.values()
    }

    /// The purpose universe `P`; never contains the sentinel.
    pub fn purpose_universe(&self) -> &[String] {
        &self.purpose_universe
    }

    pub fn action_sources(&self) -> &[String] {
        &self.action_sources
    }

    /// Resolves a raw category name (display form, slug, or alias).
    pub fn resolve_category(&self, raw: &str) -> Option<CategoryId> {
        let id = normalize_id(raw);
        if let Some(target) = self.category_aliases.get(&id) {
            return Some(target.clone());
        }
        self.categories.iter().find(|c| c.0 == id).cloned()
    }

    /// Resolves a raw value of `attribute`, applying the alias table.
    pub fn resolve_value(&self, attribute: &str, raw: &str) -> Option<String> {
        let attr = self.attribute(attribute)?;
        let mut value = normalize_id(raw);
        if let Some(target) = self.value_aliases.get(&value) {
            value = target.clone();
        }
        attr.contains(&value).then_some(value)
    }
}

fn seen_category(categories: &[CategoryId], id: &CategoryId) -> bool {
    categories.iter().any(|c| c == id)
}

/// Loads and validates a taxonomy document from disk.
pub fn load_taxonomy(path: impl AsRef<Path>) -> Result<Taxonomy, TaxonomyError> {
    let path = path.as_ref();
    let doc = std::fs::read_to_string(path)
        .map_err(|source| TaxonomyError::Io { path: path.display().to_string(), source })?;
    Taxonomy::from_toml_str(&doc)
}
