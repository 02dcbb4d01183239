use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};

const BUILTIN: &[(&str, &str)] = &[
    ("FIRST_NAME", include_str!("../../data/FIRST_NAME.txt")),
    ("LAST_NAME", include_str!("../../data/LAST_NAME.txt")),
    ("CITY", include_str!("../../data/CITY.txt")),
    ("STATE", include_str!("../../data/STATE.txt")),
    ("COUNTRY", include_str!("../../data/COUNTRY.txt")),
    ("STREET", include_str!("../../data/STREET.txt")),
    ("LOCATION-OTHER", include_str!("../../data/LOCATION-OTHER.txt")),
    ("WARD", include_str!("../../data/WARD.txt")),
    ("HOSPITAL", include_str!("../../data/HOSPITAL.txt")),
    ("ORGANIZATION", include_str!("../../data/ORGANIZATION.txt")),
    ("PROFESSION", include_str!("../../data/PROFESSION.txt")),
    ("EMAIL_DOMAIN", include_str!("../../data/EMAIL_DOMAIN.txt")),
];

/// Named surrogate word lists. Each list is trimmed, de-duplicated and keeps
/// file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    lists: BTreeMap<String, Vec<String>>,
}

impl Vocabulary {
    pub fn builtin() -> Self {
        let mut v = Vocabulary::default();
        for (key, body) in BUILTIN {
            v.insert(*key, parse_lines(body));
        }
        v
    }

    /// Replaces lists with every `<KEY>.txt` found in `dir`.
    pub fn with_dir(mut self, dir: &Path) -> Result<Self> {
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        paths.sort();
        for p in paths {
            let body = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            let key = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            self.insert(key, parse_lines(&body));
        }
        Ok(self)
    }

    pub fn insert(&mut self, key: impl Into<String>, values: Vec<String>) {
        let mut seen = HashSet::new();
        let values = values.into_iter().filter(|v| seen.insert(v.clone())).collect();
        self.lists.insert(key.into(), values);
    }

    pub fn get(&self, key: &str) -> &[String] {
        self.lists.get(key).map(Vec::as_slice).unwrap_or(&[])
    }
}

fn parse_lines(body: &str) -> Vec<String> {
    body.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}
