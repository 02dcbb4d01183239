//! Critical-entity count statistics per document and per patient.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::brat::DocumentBundle;
use crate::error::{Error, Result};
use crate::leakage::{PhiDistribution, PhiEntry};
use crate::surrogate::Registry;

/// Critical mentions of one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocCount {
    pub doc_id: String,
    pub patient_id: String,
    pub critical: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub min: u64,
    pub max: u64,
}

impl Summary {
    pub fn of(values: &[u64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_unstable();
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2] as f64
        } else {
            (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
        };
        Some(Summary {
            n,
            mean: v.iter().sum::<u64>() as f64 / n as f64,
            median,
            min: v[0],
            max: v[n - 1],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: Summary,
    pub patients: Summary,
}

/// Counts for one bundle plus one distribution entry per annotated category.
pub fn count_bundle(bundle: &DocumentBundle, registry: &Registry) -> (DocCount, Vec<PhiEntry>) {
    let mut by_cat: BTreeMap<&str, u64> = BTreeMap::new();
    for rec in &bundle.annotations {
        *by_cat.entry(rec.category.as_str()).or_default() += 1;
    }
    let patient = bundle.patient_key().to_string();
    let mut critical = 0;
    let entries = by_cat
        .into_iter()
        .map(|(cat, n)| {
            let is_critical = registry.is_critical(cat);
            if is_critical {
                critical += n;
            }
            PhiEntry {
                doc_id: bundle.doc_id.clone(),
                patient_id: patient.clone(),
                category: cat.to_string(),
                critical: is_critical,
                mention_count: n,
            }
        })
        .collect();
    (
        DocCount {
            doc_id: bundle.doc_id.clone(),
            patient_id: patient,
            critical,
        },
        entries,
    )
}

/// Per-document critical totals of a distribution. Documents listed only
/// with non-critical categories count as zero.
pub fn counts_from_distribution(dist: &PhiDistribution) -> Vec<DocCount> {
    let mut order: Vec<String> = Vec::new();
    let mut by_doc: BTreeMap<&str, (String, u64)> = BTreeMap::new();
    for e in dist.entries() {
        let slot = by_doc.entry(e.doc_id.as_str()).or_insert_with(|| {
            order.push(e.doc_id.clone());
            (e.patient_id.clone(), 0)
        });
        if e.critical {
            slot.1 += e.mention_count;
        }
    }
    order
        .iter()
        .map(|d| {
            let (patient_id, critical) = by_doc[d.as_str()].clone();
            DocCount {
                doc_id: d.clone(),
                patient_id,
                critical,
            }
        })
        .collect()
}

pub fn corpus_stats(docs: &[DocCount]) -> Result<CorpusStats> {
    if docs.is_empty() {
        return Err(Error::Config("corpus has no documents".into()));
    }
    let per_doc: Vec<u64> = docs.iter().map(|d| d.critical).collect();
    let mut per_patient: BTreeMap<&str, u64> = BTreeMap::new();
    for d in docs {
        *per_patient.entry(d.patient_id.as_str()).or_default() += d.critical;
    }
    let per_patient: Vec<u64> = per_patient.into_values().collect();
    Ok(CorpusStats {
        documents: Summary::of(&per_doc).expect("non-empty"),
        patients: Summary::of(&per_patient).expect("non-empty"),
    })
}

pub const STATS_HEADER: [&str; 6] = ["level", "count", "mean", "median", "min", "max"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub level: String,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub min: u64,
    pub max: u64,
}

pub fn write_stats<W: Write>(writer: W, stats: &CorpusStats) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Write(e.to_string());
    w.write_record(STATS_HEADER).map_err(err)?;
    for (level, s) in [("document", stats.documents), ("patient", stats.patients)] {
        w.write_record([
            level.to_string(),
            s.n.to_string(),
            format!("{:.4}", s.mean),
            s.median.to_string(),
            s.min.to_string(),
            s.max.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Write(e.to_string()))?;
    Ok(())
}

/// `doc_id,patient_id,critical`, one row per document.
pub fn write_doc_counts<W: Write>(writer: W, docs: &[DocCount]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Write(e.to_string());
    w.write_record(["doc_id", "patient_id", "critical"]).map_err(err)?;
    for d in docs {
        w.write_record([d.doc_id.as_str(), d.patient_id.as_str(), &d.critical.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Write(e.to_string()))?;
    Ok(())
}

pub fn read_doc_counts<R: Read>(reader: R, source_name: &str) -> Result<Vec<DocCount>> {
    crate::table::read_rows(reader, source_name)
}

pub fn read_stats<R: Read>(reader: R, source_name: &str) -> Result<Vec<StatsRow>> {
    crate::table::read_rows(reader, source_name)
}

/// Two-row table in the layout `Critical Entities Mean (Range)`.
pub fn format_table(stats: &CorpusStats) -> String {
    let mut out = String::from("level      count  critical mean  median  range\n");
    for (level, s) in [("document", stats.documents), ("patient", stats.patients)] {
        out.push_str(&format!(
            "{level:<9} {:>6}  {:>13.1}  {:>6}  {}-{}\n",
            s.n, s.mean, s.median, s.min, s.max
        ));
    }
    out
}
