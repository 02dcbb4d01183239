//! Surrogate values for each PHI category.
//!
//! List and format kinds draw canonical values from a [`SurrogatePool`] and
//! render them against the original mention (name shape, casing, character
//! classes). Date, age and time kinds shift the original by an
//! [`OffsetPolicy`] instead.

pub mod format;
pub mod names;
pub mod offsets;
pub mod pool;
pub mod registry;
pub mod vocab;

use std::path::Path;

use rand::Rng;

pub use offsets::{offset_age, offset_date, offset_time, DateOrder, OffsetPolicy, OffsetScope, Shifted};
pub use pool::{build_pool, SurrogatePool, DEFAULT_POOL_SIZE};
pub use registry::{CategorySpec, GeneratorKind, Registry};
pub use vocab::Vocabulary;

use crate::error::Result;
use crate::report::EventKind;
use crate::seed::{derive_seed, fnv1a, rng_from};

/// A generated value plus the audit event it raised, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub value: String,
    pub event: Option<(EventKind, String)>,
}

impl Generated {
    fn plain(value: String) -> Self {
        Generated { value, event: None }
    }
}

/// Registry and vocabularies bundled together.
#[derive(Debug, Clone, Default)]
pub struct Surrogates {
    registry: Registry,
    vocab: Vocabulary,
}

impl Surrogates {
    pub fn new(registry: Registry, vocab: Vocabulary) -> Self {
        Surrogates { registry, vocab }
    }

    pub fn builtin() -> Self {
        Surrogates::new(Registry::builtin(), Vocabulary::builtin())
    }

    /// Built-in data with optional registry and vocabulary overrides.
    pub fn load(registry_path: Option<&Path>, vocab_dir: Option<&Path>) -> Result<Self> {
        let registry = match registry_path {
            Some(p) => Registry::builtin_with_overrides(p)?,
            None => Registry::builtin(),
        };
        let vocab = match vocab_dir {
            Some(d) => Vocabulary::builtin().with_dir(d)?,
            None => Vocabulary::builtin(),
        };
        Ok(Surrogates::new(registry, vocab))
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn spec(&self, category: &str) -> Option<&CategorySpec> {
        self.registry.get(category)
    }

    pub fn capacity(&self, spec: &CategorySpec) -> u64 {
        pool::capacity(spec, &self.vocab)
    }

    pub fn build_pool(&self, spec: &CategorySpec, k: usize, seed: u64) -> Result<SurrogatePool> {
        pool::build_pool(spec, &self.vocab, k, seed)
    }

    /// Fits a canonical pool value to the original mention. The result is a
    /// pure function of `(value, original)`, so a repeated pool value renders
    /// identically at every mention with the same original.
    pub fn render(&self, spec: &CategorySpec, value: &str, original: Option<&str>) -> String {
        let orig = original.map(str::trim).filter(|o| !o.is_empty());
        let shaped_rng = |o: &str| rng_from(derive_seed(fnv1a(value.as_bytes()), o));
        match spec.kind {
            GeneratorKind::NameList => names::render_name(value, orig),
            GeneratorKind::LocationList => {
                let Some(o) = orig else { return value.to_string() };
                let styled = names::match_case(value, o);
                let house: String = o.chars().take_while(char::is_ascii_digit).collect();
                if house.is_empty() {
                    styled
                } else {
                    let n = 100 + fnv1a(value.as_bytes()) % 9900;
                    format!("{n} {styled}")
                }
            }
            GeneratorKind::HospitalList | GeneratorKind::OrganizationList | GeneratorKind::ProfessionList => {
                orig.map_or_else(|| value.to_string(), |o| names::match_case(value, o))
            }
            GeneratorKind::PhoneFormat | GeneratorKind::IdFormat | GeneratorKind::Alphanumeric => {
                match orig.filter(|o| format::has_variable_chars(o)) {
                    Some(o) => {
                        let lead = spec.kind == GeneratorKind::PhoneFormat;
                        let mut rng = shaped_rng(o);
                        let mut out = format::fill_shape(o, &mut rng, lead);
                        for _ in 0..16 {
                            if out != o {
                                break;
                            }
                            out = format::fill_shape(o, &mut rng, lead);
                        }
                        out
                    }
                    None => value.to_string(),
                }
            }
            GeneratorKind::Email => value.to_string(),
            GeneratorKind::Url => match orig.filter(|o| format::looks_like_ipv4(o)) {
                Some(o) => format::random_ipv4(&mut shaped_rng(o)),
                None => value.to_string(),
            },
            GeneratorKind::PassthroughLabel => value.to_string(),
            GeneratorKind::DateOffset | GeneratorKind::AgeOffset | GeneratorKind::TimeOffset => value.to_string(),
        }
    }

    /// Shifts an offset-kind mention. Absent originals get a fresh canonical
    /// value without raising a fallback event.
    pub fn shift<R: Rng + ?Sized>(
        &self,
        spec: &CategorySpec,
        original: Option<&str>,
        policy: &OffsetPolicy,
        rng: &mut R,
    ) -> Generated {
        let (shifted, event) = match (spec.kind, original) {
            (GeneratorKind::DateOffset, Some(o)) => (offset_date(o, policy, rng), EventKind::DateFallback),
            (GeneratorKind::AgeOffset, Some(o)) => (offset_age(o, rng, policy), EventKind::AgeFallback),
            (GeneratorKind::TimeOffset, Some(o)) => (offset_time(o, policy, rng), EventKind::TimeFallback),
            (GeneratorKind::DateOffset, None) => return Generated::plain(offset_date("", policy, rng).value),
            (GeneratorKind::AgeOffset, None) => return Generated::plain(offset_age("", rng, policy).value),
            (GeneratorKind::TimeOffset, None) => return Generated::plain(offset_time("", policy, rng).value),
            _ => unreachable!("shift called for a non-offset kind"),
        };
        Generated {
            event: shifted
                .fallback
                .then(|| (event, format!("could not parse {:?}", original.unwrap_or_default()))),
            value: shifted.value,
        }
    }

    /// One-off surrogate for a mention, drawn from the whole value space
    /// rather than a pool. Unknown labels render as `[LABEL]` with a warning.
    pub fn generate<R: Rng + ?Sized>(
        &self,
        category: &str,
        original: Option<&str>,
        policy: &OffsetPolicy,
        rng: &mut R,
    ) -> Generated {
        let Some(spec) = self.registry.get(category) else {
            return Generated {
                value: format!("[{category}]"),
                event: Some((EventKind::UnknownCategory, format!("no generator registered for {category}"))),
            };
        };
        if spec.kind.is_offset() {
            return self.shift(spec, original, policy, rng);
        }
        let cap = self.capacity(spec);
        if cap == 0 {
            return Generated::plain(format!("[{category}]"));
        }
        let mut out = String::new();
        for _ in 0..16 {
            let v = pool::value_at(spec, &self.vocab, rng.random_range(0..cap));
            out = self.render(spec, &v, original);
            if original.is_none_or(|o| !out.eq_ignore_ascii_case(o.trim())) {
                break;
            }
        }
        Generated::plain(out)
    }
}
