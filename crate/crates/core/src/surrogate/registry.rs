use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUILTIN_REGISTRY: &str = include_str!("../../data/categories.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    NameList,
    LocationList,
    HospitalList,
    OrganizationList,
    DateOffset,
    AgeOffset,
    PhoneFormat,
    IdFormat,
    Alphanumeric,
    Email,
    Url,
    ProfessionList,
    TimeOffset,
    PassthroughLabel,
}

impl GeneratorKind {
    /// Offset kinds shift the original value instead of drawing from a pool.
    pub fn is_offset(self) -> bool {
        matches!(
            self,
            GeneratorKind::DateOffset | GeneratorKind::AgeOffset | GeneratorKind::TimeOffset
        )
    }

    /// Kinds whose surrogates come from a vocabulary list.
    pub fn is_list(self) -> bool {
        matches!(
            self,
            GeneratorKind::NameList
                | GeneratorKind::LocationList
                | GeneratorKind::HospitalList
                | GeneratorKind::OrganizationList
                | GeneratorKind::ProfessionList
        )
    }

    /// Kinds that mirror the positional character classes of the original.
    pub fn is_format_preserving(self) -> bool {
        matches!(
            self,
            GeneratorKind::PhoneFormat | GeneratorKind::IdFormat | GeneratorKind::Alphanumeric
        )
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GeneratorKind::NameList => "name-list",
            GeneratorKind::LocationList => "location-list",
            GeneratorKind::HospitalList => "hospital-list",
            GeneratorKind::OrganizationList => "organization-list",
            GeneratorKind::DateOffset => "date-offset",
            GeneratorKind::AgeOffset => "age-offset",
            GeneratorKind::PhoneFormat => "phone-format",
            GeneratorKind::IdFormat => "id-format",
            GeneratorKind::Alphanumeric => "alphanumeric",
            GeneratorKind::Email => "email",
            GeneratorKind::Url => "url",
            GeneratorKind::ProfessionList => "profession-list",
            GeneratorKind::TimeOffset => "time-offset",
            GeneratorKind::PassthroughLabel => "passthrough-label",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategorySpec {
    pub category: String,
    pub kind: GeneratorKind,
    pub critical: bool,
    /// Vocabulary file key for list kinds; defaults to the category label.
    pub vocabulary: Option<String>,
}

impl CategorySpec {
    pub fn new(category: impl Into<String>, kind: GeneratorKind, critical: bool) -> Self {
        CategorySpec {
            category: category.into(),
            kind,
            critical,
            vocabulary: None,
        }
    }

    pub fn vocabulary_key(&self) -> &str {
        self.vocabulary.as_deref().unwrap_or(&self.category)
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct RegistryFile {
    #[serde(default)]
    categories: BTreeMap<String, RegistryEntry>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RegistryEntry {
    kind: GeneratorKind,
    #[serde(default)]
    critical: bool,
    vocabulary: Option<String>,
}

/// Annotation label → generator mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registry {
    specs: BTreeMap<String, CategorySpec>,
}

impl Default for Registry {
    fn default() -> Self {
        Registry::builtin()
    }
}

impl Registry {
    pub fn builtin() -> Self {
        Registry::from_toml_str(BUILTIN_REGISTRY).expect("built-in category registry is valid")
    }

    pub fn empty() -> Self {
        Registry {
            specs: BTreeMap::new(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let file: RegistryFile = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        let specs = file
            .categories
            .into_iter()
            .map(|(label, e)| {
                let spec = CategorySpec {
                    category: label.clone(),
                    kind: e.kind,
                    critical: e.critical,
                    vocabulary: e.vocabulary,
                };
                (label, spec)
            })
            .collect();
        Ok(Registry { specs })
    }

    /// The built-in registry with entries from `path` layered on top.
    pub fn builtin_with_overrides(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut reg = Registry::builtin();
        reg.extend(Registry::from_toml_str(&raw)?);
        Ok(reg)
    }

    pub fn extend(&mut self, other: Registry) {
        self.specs.extend(other.specs);
    }

    pub fn insert(&mut self, spec: CategorySpec) {
        self.specs.insert(spec.category.clone(), spec);
    }

    pub fn get(&self, label: &str) -> Option<&CategorySpec> {
        self.specs.get(label)
    }

    pub fn is_critical(&self, label: &str) -> bool {
        self.get(label).is_some_and(|s| s.critical)
    }

    pub fn iter(&self) -> impl Iterator<Item = &CategorySpec> {
        self.specs.values()
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn to_toml(&self) -> String {
        let file = RegistryFile {
            categories: self
                .specs
                .iter()
                .map(|(k, s)| {
                    (
                        k.clone(),
                        RegistryEntry {
                            kind: s.kind,
                            critical: s.critical,
                            vocabulary: s.vocabulary.clone(),
                        },
                    )
                })
                .collect(),
        };
        toml::to_string(&file).expect("registry serializes")
    }
}
