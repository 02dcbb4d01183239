//! Fixed-size pools of distinct surrogate values.
//!
//! Every generator kind enumerates its value space by index, so a pool of K
//! values is a uniform K-subset of `0..capacity` mapped through
//! [`value_at`]. Pool values are canonical; shaping a value to a particular
//! mention happens at render time.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;

use super::registry::{CategorySpec, GeneratorKind};
use super::vocab::Vocabulary;
use crate::error::{Error, Result};
use crate::seed::rng_from;

pub const DEFAULT_POOL_SIZE: usize = 1000;

const HOSPITAL_SUFFIXES: &[&str] = &[
    "Hospital",
    "Medical Center",
    "Regional Medical Center",
    "Memorial Hospital",
    "Community Hospital",
    "Clinic",
    "Health Center",
    "General Hospital",
];

const ORGANIZATION_SUFFIXES: &[&str] = &[
    "Inc.",
    "LLC",
    "Corporation",
    "Group",
    "Industries",
    "Associates",
    "Partners",
    "Company",
];

const URL_TLDS: &[&str] = &["com", "org", "net"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurrogatePool {
    category: String,
    values: Vec<String>,
}

impl SurrogatePool {
    pub fn new(category: impl Into<String>, values: Vec<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyPool);
        }
        let mut seen = HashSet::with_capacity(values.len());
        if let Some(dup) = values.iter().find(|v| !seen.insert(v.as_str())) {
            return Err(Error::Config(format!("duplicate surrogate {dup:?} in pool")));
        }
        Ok(SurrogatePool {
            category: category.into(),
            values,
        })
    }

    pub fn category(&self) -> &str {
        &self.category
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; pools cannot be constructed empty.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> &str {
        &self.values[i]
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> &str {
        &self.values[rng.random_range(0..self.values.len())]
    }
}

/// Number of distinct values the generator can produce.
pub fn capacity(spec: &CategorySpec, vocab: &Vocabulary) -> u64 {
    let list = |key: &str| vocab.get(key).len() as u64;
    let (first, last) = (list("FIRST_NAME"), list("LAST_NAME"));
    match spec.kind {
        GeneratorKind::NameList => first * last,
        GeneratorKind::LocationList | GeneratorKind::ProfessionList => list(spec.vocabulary_key()),
        GeneratorKind::HospitalList => list(spec.vocabulary_key()) * HOSPITAL_SUFFIXES.len() as u64,
        GeneratorKind::OrganizationList => list(spec.vocabulary_key()) * ORGANIZATION_SUFFIXES.len() as u64,
        GeneratorKind::PhoneFormat => 800 * 10_000_000,
        GeneratorKind::IdFormat => 1_000_000_000,
        GeneratorKind::Alphanumeric => 26 * 26 * 100_000_000,
        GeneratorKind::Email => first * last * list("EMAIL_DOMAIN"),
        GeneratorKind::Url => first * last * URL_TLDS.len() as u64,
        GeneratorKind::PassthroughLabel => 1,
        GeneratorKind::DateOffset | GeneratorKind::AgeOffset | GeneratorKind::TimeOffset => 0,
    }
}

/// The `i`-th value of the generator's enumeration, `i < capacity`.
pub fn value_at(spec: &CategorySpec, vocab: &Vocabulary, i: u64) -> String {
    let pick = |key: &str, j: u64| vocab.get(key)[j as usize].clone();
    let n_last = vocab.get("LAST_NAME").len() as u64;
    let name = |j: u64| (pick("FIRST_NAME", j / n_last), pick("LAST_NAME", j % n_last));
    match spec.kind {
        GeneratorKind::NameList => {
            let (f, l) = name(i);
            format!("{f} {l}")
        }
        GeneratorKind::LocationList | GeneratorKind::ProfessionList => pick(spec.vocabulary_key(), i),
        GeneratorKind::HospitalList => {
            let n = HOSPITAL_SUFFIXES.len() as u64;
            format!("{} {}", pick(spec.vocabulary_key(), i / n), HOSPITAL_SUFFIXES[(i % n) as usize])
        }
        GeneratorKind::OrganizationList => {
            let n = ORGANIZATION_SUFFIXES.len() as u64;
            format!("{} {}", pick(spec.vocabulary_key(), i / n), ORGANIZATION_SUFFIXES[(i % n) as usize])
        }
        GeneratorKind::PhoneFormat => {
            let area = 200 + i / 10_000_000;
            let rest = i % 10_000_000;
            format!("({area}) {:03}-{:04}", rest / 10_000, rest % 10_000)
        }
        GeneratorKind::IdFormat => format!("{i:09}"),
        GeneratorKind::Alphanumeric => {
            let letters = i / 100_000_000;
            let a = char::from(b'A' + (letters / 26) as u8);
            let b = char::from(b'A' + (letters % 26) as u8);
            format!("{a}{b}{:08}", i % 100_000_000)
        }
        GeneratorKind::Email => {
            let domains = vocab.get("EMAIL_DOMAIN").len() as u64;
            let (f, l) = name(i / domains);
            format!("{}.{}@{}", f.to_lowercase(), l.to_lowercase(), pick("EMAIL_DOMAIN", i % domains))
        }
        GeneratorKind::Url => {
            let n = URL_TLDS.len() as u64;
            let (f, l) = name(i / n);
            let host: String = format!("{l}{f}")
                .chars()
                .filter(char::is_ascii_alphanumeric)
                .collect::<String>()
                .to_lowercase();
            format!("https://www.{host}.{}", URL_TLDS[(i % n) as usize])
        }
        GeneratorKind::PassthroughLabel => format!("[{}]", spec.category),
        GeneratorKind::DateOffset | GeneratorKind::AgeOffset | GeneratorKind::TimeOffset => {
            unreachable!("offset generators have no enumeration")
        }
    }
}

/// Draws `k` distinct values without replacement, deterministically from
/// `seed`. Name pools also keep first names and surnames distinct when the
/// vocabularies are large enough.
pub fn build_pool(spec: &CategorySpec, vocab: &Vocabulary, k: usize, seed: u64) -> Result<SurrogatePool> {
    if spec.kind.is_offset() {
        return Err(Error::Config(format!(
            "{} uses the {} generator, which shifts values instead of drawing from a pool",
            spec.category, spec.kind
        )));
    }
    if k == 0 {
        return Err(Error::EmptyPool);
    }
    let cap = capacity(spec, vocab);
    if k as u64 > cap {
        return Err(Error::PoolCapacity {
            category: spec.category.clone(),
            requested: k as u64,
            capacity: cap,
        });
    }
    let mut rng = rng_from(seed);
    let (firsts, lasts) = (vocab.get("FIRST_NAME"), vocab.get("LAST_NAME"));
    if spec.kind == GeneratorKind::NameList && firsts.len() >= k && lasts.len() >= k {
        // pair two draws without replacement so that first names alone, and
        // surnames alone, are also distinct within the pool
        let f = index::sample(&mut rng, firsts.len(), k);
        let l = index::sample(&mut rng, lasts.len(), k);
        let values = f.iter().zip(l.iter()).map(|(i, j)| format!("{} {}", firsts[i], lasts[j])).collect();
        return SurrogatePool::new(spec.category.clone(), values);
    }
    let values = index::sample(&mut rng, cap as usize, k)
        .into_iter()
        .map(|i| value_at(spec, vocab, i as u64))
        .collect();
    SurrogatePool::new(spec.category.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::Registry;

    fn spec(label: &str) -> CategorySpec {
        Registry::builtin().get(label).unwrap().clone()
    }

    #[test]
    fn patient_pool_of_1000_is_distinct_and_reproducible() {
        let v = Vocabulary::builtin();
        let a = build_pool(&spec("PATIENT"), &v, 1000, 7).unwrap();
        let b = build_pool(&spec("PATIENT"), &v, 1000, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1000);
        let set: HashSet<_> = a.values().iter().collect();
        assert_eq!(set.len(), 1000);
        assert_ne!(a, build_pool(&spec("PATIENT"), &v, 1000, 8).unwrap());
        // a first-name-only mention still sees 1000 distinct surrogates
        let firsts: HashSet<_> = a.values().iter().map(|n| n.split(' ').next().unwrap()).collect();
        let lasts: HashSet<_> = a.values().iter().map(|n| n.split(' ').nth(1).unwrap()).collect();
        assert_eq!((firsts.len(), lasts.len()), (1000, 1000));
    }

    #[test]
    fn single_value_pool() {
        let p = build_pool(&spec("PATIENT"), &Vocabulary::builtin(), 1, 3).unwrap();
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn capacity_errors() {
        let v = Vocabulary::builtin();
        match build_pool(&spec("PATIENT"), &v, 1_000_000_000, 1) {
            Err(Error::PoolCapacity { capacity, requested, .. }) => {
                let names = |k: &str| v.get(k).len() as u64;
                assert_eq!(capacity, names("FIRST_NAME") * names("LAST_NAME"));
                assert_eq!(requested, 1_000_000_000);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(build_pool(&spec("STATE"), &v, 51, 1), Err(Error::PoolCapacity { capacity: 50, .. })));
        assert!(build_pool(&spec("STATE"), &v, 50, 1).is_ok());
        assert!(matches!(build_pool(&spec("PATIENT"), &v, 0, 1), Err(Error::EmptyPool)));
        assert!(build_pool(&spec("DATE"), &v, 10, 1).is_err());
    }

    #[test]
    fn enumerations_are_injective() {
        let v = Vocabulary::builtin();
        for label in ["PATIENT", "HOSPITAL", "ORGANIZATION", "CITY", "PROFESSION", "EMAIL", "URL"] {
            let s = spec(label);
            let cap = capacity(&s, &v);
            let n = cap.min(20_000);
            let set: HashSet<String> = (0..n).map(|i| value_at(&s, &v, i)).collect();
            assert_eq!(set.len() as u64, n, "{label}");
        }
    }

    #[test]
    fn value_formats() {
        let v = Vocabulary::builtin();
        assert_eq!(value_at(&spec("PHONE"), &v, 0), "(200) 000-0000");
        assert_eq!(value_at(&spec("PHONE"), &v, 7_999_999_999), "(999) 999-9999");
        assert_eq!(value_at(&spec("IDNUM"), &v, 42), "000000042");
        assert_eq!(value_at(&spec("DEVICE"), &v, 26 * 26 * 100_000_000 - 1), "ZZ99999999");
        assert!(value_at(&spec("EMAIL"), &v, 5).contains('@'));
        assert!(value_at(&spec("URL"), &v, 5).starts_with("https://www."));
        assert_eq!(value_at(&spec("UNIQUE"), &v, 0), "[UNIQUE]");
    }

    #[test]
    fn new_rejects_bad_pools() {
        assert!(matches!(SurrogatePool::new("X", vec![]), Err(Error::EmptyPool)));
        assert!(SurrogatePool::new("X", vec!["a".into(), "a".into()]).is_err());
    }
}
