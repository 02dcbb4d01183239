//! Monte-Carlo leakage of critical PHI under substitution strategies.
//!
//! Each run draws a false-negative count for every document's critical
//! mentions and samples the strategy's surrogate chains over the same
//! mention counts. A Consistent document leaks on any false negative; other
//! strategies leak only when the false-negative count exceeds the maximum
//! surrogate repeat size. A patient leaks when any of its documents does.
//!
//! Every (run, document) pair owns a random substream, and FN counts come
//! from the binomial inverse CDF of a single uniform. Within a run the same
//! document therefore sees the same uniforms at every FNER and under every
//! strategy, so leak indicators are monotone in FNER run by run.

mod synth;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_index, derive_seed, rng_from};
use crate::strategy::{ChainSampler, StrategyConfig, StrategyKind};

pub use synth::{synth_distribution, SynthTargets, MIMIC_TARGETS, UAB_TARGETS};

pub const DEFAULT_RUNS: usize = 1000;
pub const DEFAULT_FNERS: [f64; 4] = [0.001, 0.005, 0.01, 0.05];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiEntry {
    pub doc_id: String,
    pub patient_id: String,
    pub category: String,
    #[serde(deserialize_with = "lenient_bool")]
    pub critical: bool,
    pub mention_count: u64,
}

fn lenient_bool<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "y" => Ok(true),
        "false" | "0" | "no" | "n" => Ok(false),
        other => Err(serde::de::Error::custom(format!("expected a boolean, got {other:?}"))),
    }
}

/// Per-document, per-category PHI mention counts grouped by patient.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PhiDistribution {
    entries: Vec<PhiEntry>,
}

impl PhiDistribution {
    pub fn new(entries: Vec<PhiEntry>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for (i, e) in entries.iter().enumerate() {
            if e.mention_count == 0 {
                return Err(Error::InvalidRecord {
                    id: format!("entry {}", i + 1),
                    message: format!("{}/{} has mention_count 0", e.doc_id, e.category),
                });
            }
            if !seen.insert((e.doc_id.as_str(), e.category.as_str())) {
                return Err(Error::InvalidRecord {
                    id: format!("entry {}", i + 1),
                    message: format!("{}/{} listed twice", e.doc_id, e.category),
                });
            }
        }
        Ok(PhiDistribution { entries })
    }

    pub fn entries(&self) -> &[PhiEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Reads the `doc_id,patient_id,category,critical,mention_count` CSV.
    /// Row numbers in errors count the header as row 1.
    pub fn read_csv<R: Read>(reader: R, source_name: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut entries = Vec::new();
        let mut seen = HashMap::new();
        for (i, row) in rdr.deserialize::<PhiEntry>().enumerate() {
            let row_no = i + 2;
            let err = |message: String| Error::Csv {
                source_name: source_name.to_string(),
                row: row_no,
                message,
            };
            let e = row.map_err(|e| err(e.to_string()))?;
            if e.mention_count == 0 {
                return Err(err("mention_count must be at least 1".into()));
            }
            if let Some(prev) = seen.insert((e.doc_id.clone(), e.category.clone()), row_no) {
                return Err(err(format!("{}/{} already given on row {prev}", e.doc_id, e.category)));
            }
            entries.push(e);
        }
        Ok(PhiDistribution { entries })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        PhiDistribution::read_csv(f, &path.display().to_string())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Write(e.to_string());
        w.write_record(["doc_id", "patient_id", "category", "critical", "mention_count"])
            .map_err(io)?;
        for e in &self.entries {
            w.write_record([
                e.doc_id.as_str(),
                e.patient_id.as_str(),
                e.category.as_str(),
                if e.critical { "true" } else { "false" },
                &e.mention_count.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Write(e.to_string()))?;
        Ok(())
    }

    /// Total critical mentions per document, in first-appearance order.
    pub fn critical_totals(&self) -> Vec<(String, u64)> {
        self.prepare()
            .docs
            .iter()
            .map(|d| (d.doc_id.clone(), d.chains.iter().sum()))
            .collect()
    }

    fn prepare(&self) -> SimCorpus {
        let mut doc_index: HashMap<&str, usize> = HashMap::new();
        let mut patient_index: HashMap<&str, usize> = HashMap::new();
        let mut docs: Vec<SimDoc> = Vec::new();
        for e in &self.entries {
            let n_patients = patient_index.len();
            let patient = *patient_index.entry(e.patient_id.as_str()).or_insert(n_patients);
            let d = *doc_index.entry(e.doc_id.as_str()).or_insert_with(|| {
                docs.push(SimDoc {
                    doc_id: e.doc_id.clone(),
                    patient,
                    chains: Vec::new(),
                });
                docs.len() - 1
            });
            if e.critical {
                docs[d].chains.push(e.mention_count);
            }
        }
        SimCorpus {
            docs,
            n_patients: patient_index.len(),
        }
    }
}

#[derive(Debug)]
struct SimDoc {
    doc_id: String,
    patient: usize,
    // critical mention count of each (document, category) chain
    chains: Vec<u64>,
}

#[derive(Debug)]
struct SimCorpus {
    docs: Vec<SimDoc>,
    n_patients: usize,
}

/// How false negatives are compared with repeat sizes in one document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Accounting {
    /// Document FN total against the largest repeat size over its chains.
    #[default]
    Pooled,
    /// Each category's FN count against that category's own repeat size.
    PerType,
}

impl FromStr for Accounting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pooled" => Ok(Accounting::Pooled),
            "per-type" | "per_type" | "pertype" => Ok(Accounting::PerType),
            other => Err(Error::Config(format!("unknown accounting mode {other:?}"))),
        }
    }
}

impl fmt::Display for Accounting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Accounting::Pooled => "pooled",
            Accounting::PerType => "per-type",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub fner: f64,
    pub runs: usize,
    pub strategy: StrategyConfig,
    pub accounting: Accounting,
}

impl SimConfig {
    pub fn new(fner: f64, runs: usize, strategy: StrategyConfig, accounting: Accounting) -> Result<Self> {
        if !(fner > 0.0 && fner < 1.0) {
            return Err(Error::Config(format!("FNER must lie strictly between 0 and 1, got {fner}")));
        }
        if runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        Ok(SimConfig {
            fner,
            runs,
            strategy,
            accounting,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakSummary {
    pub strategy: String,
    pub fner: f64,
    pub runs: usize,
    pub n_docs: usize,
    pub n_patients: usize,
    pub doc_leak_rate: f64,
    pub doc_leak_stderr: f64,
    pub patient_leak_rate: f64,
    pub patient_leak_stderr: f64,
    /// Leaked documents in each run, by run index.
    pub doc_leaks: Vec<u32>,
    /// Leaked patients in each run, by run index.
    pub patient_leaks: Vec<u32>,
}

/// Binomial(n, p) draw by inverting the CDF at one uniform. Falls back to
/// `rand_distr`'s sampler when `(1 - p)^n` underflows.
pub fn inject_fn<R: Rng + ?Sized>(mention_count: u64, fner: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    binomial_quantile(mention_count, fner, u).unwrap_or_else(|| {
        use rand_distr::{Binomial, Distribution};
        Binomial::new(mention_count, fner).map_or(0, |b| b.sample(rng))
    })
}

/// Smallest k with P(X ≤ k) > u, or `None` when the pmf at 0 underflows.
fn binomial_quantile(n: u64, p: f64, u: f64) -> Option<u64> {
    if n == 0 || p <= 0.0 {
        return Some(0);
    }
    if p >= 1.0 {
        return Some(n);
    }
    let mut pmf = (n as f64 * (-p).ln_1p()).exp();
    if pmf < 1e-280 {
        return None;
    }
    let ratio = p / (1.0 - p);
    let mut cdf = pmf;
    let mut k = 0u64;
    while u >= cdf && k < n {
        pmf *= (n - k) as f64 / (k + 1) as f64 * ratio;
        k += 1;
        cdf += pmf;
    }
    Some(k)
}

/// The leak predicate: any FN for Consistent, otherwise strictly more FNs
/// than the maximum surrogate repeat size.
pub fn doc_leak(kind: StrategyKind, fn_count: u64, max_repeat: u64) -> bool {
    match kind {
        StrategyKind::Consistent => fn_count >= 1,
        _ => fn_count > max_repeat,
    }
}

fn doc_leaks<R: Rng + ?Sized>(
    doc: &SimDoc,
    cfg: &SimConfig,
    sampler: &mut ChainSampler,
    rng: &mut R,
) -> bool {
    let kind = cfg.strategy.kind;
    let p_new = cfg.strategy.p_new;
    match cfg.accounting {
        Accounting::Pooled => {
            let total: u64 = doc.chains.iter().sum();
            let fn_count = inject_fn(total, cfg.fner, rng);
            if kind == StrategyKind::Consistent || fn_count <= 1 {
                return doc_leak(kind, fn_count, 1);
            }
            let mut best = 0u64;
            for &n in &doc.chains {
                let stop = Some(fn_count as usize);
                best = best.max(sampler.max_repeat(n as usize, p_new, rng, stop) as u64);
                if best >= fn_count {
                    return false;
                }
            }
            doc_leak(kind, fn_count, best)
        }
        Accounting::PerType => {
            let fns: Vec<u64> = doc.chains.iter().map(|&n| inject_fn(n, cfg.fner, rng)).collect();
            let mut leaked = false;
            for (&n, &f) in doc.chains.iter().zip(&fns) {
                let l = if kind == StrategyKind::Consistent || f <= 1 {
                    doc_leak(kind, f, 1)
                } else {
                    let m = sampler.max_repeat(n as usize, p_new, rng, Some(f as usize)) as u64;
                    doc_leak(kind, f, m)
                };
                leaked |= l;
            }
            leaked
        }
    }
}

fn run_seed(master: u64, run: usize) -> u64 {
    derive_index(derive_seed(master, "simulate"), run as u64)
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean document and patient leak rates over `cfg.runs` independent runs.
pub fn simulate(dist: &PhiDistribution, cfg: &SimConfig) -> Result<LeakSummary> {
    if dist.is_empty() {
        return Err(Error::Config("the PHI distribution is empty".into()));
    }
    let corpus = dist.prepare();
    let k = cfg.strategy.pool_size;
    let per_run: Vec<(u32, u32)> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let seed = run_seed(cfg.strategy.seed, run);
            let mut sampler = ChainSampler::new(k);
            let mut patient_hit = vec![false; corpus.n_patients];
            let mut docs = 0u32;
            for (d, doc) in corpus.docs.iter().enumerate() {
                let mut rng = rng_from(derive_index(seed, d as u64));
                if doc_leaks(doc, cfg, &mut sampler, &mut rng) {
                    docs += 1;
                    patient_hit[doc.patient] = true;
                }
            }
            (docs, patient_hit.iter().filter(|&&h| h).count() as u32)
        })
        .collect();

    let n_docs = corpus.docs.len();
    let doc_rates: Vec<f64> = per_run.iter().map(|r| r.0 as f64 / n_docs as f64).collect();
    let pat_rates: Vec<f64> = per_run.iter().map(|r| r.1 as f64 / corpus.n_patients as f64).collect();
    let (doc_leak_rate, doc_leak_stderr) = mean_and_stderr(&doc_rates);
    let (patient_leak_rate, patient_leak_stderr) = mean_and_stderr(&pat_rates);
    Ok(LeakSummary {
        strategy: cfg.strategy.label(),
        fner: cfg.fner,
        runs: cfg.runs,
        n_docs,
        n_patients: corpus.n_patients,
        doc_leak_rate,
        doc_leak_stderr,
        patient_leak_rate,
        patient_leak_stderr,
        doc_leaks: per_run.iter().map(|r| r.0).collect(),
        patient_leaks: per_run.iter().map(|r| r.1).collect(),
    })
}

pub const SUMMARY_HEADER: [&str; 6] = [
    "strategy",
    "fner",
    "doc_leak_rate",
    "doc_leak_stderr",
    "patient_leak_rate",
    "patient_leak_stderr",
];

/// One row per summary, header first.
pub fn write_summaries<W: Write>(writer: W, rows: &[LeakSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Write(e.to_string());
    w.write_record(SUMMARY_HEADER).map_err(err)?;
    for r in rows {
        w.write_record([
            r.strategy.clone(),
            r.fner.to_string(),
            format!("{:.6}", r.doc_leak_rate),
            format!("{:.6}", r.doc_leak_stderr),
            format!("{:.6}", r.patient_leak_rate),
            format!("{:.6}", r.patient_leak_stderr),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Write(e.to_string()))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub strategy: String,
    pub fner: f64,
    pub doc_leak_rate: f64,
    pub doc_leak_stderr: f64,
    pub patient_leak_rate: f64,
    pub patient_leak_stderr: f64,
}

pub fn read_summaries<R: Read>(reader: R, source_name: &str) -> Result<Vec<SummaryRow>> {
    crate::table::read_rows(reader, source_name)
}

/// Paired Fig-3 style histograms over (run, document) pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RepeatHistograms {
    pub max_repeat: BTreeMap<u64, u64>,
    pub fn_count: BTreeMap<u64, u64>,
}

impl RepeatHistograms {
    fn merge(mut self, other: RepeatHistograms) -> Self {
        for (k, v) in other.max_repeat {
            *self.max_repeat.entry(k).or_insert(0) += v;
        }
        for (k, v) in other.fn_count {
            *self.fn_count.entry(k).or_insert(0) += v;
        }
        self
    }

    /// CSV rows `value,count,series` with series `max_repeat` and `fn_count`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Write(e.to_string());
        w.write_record(["value", "count", "series"]).map_err(err)?;
        for (series, h) in [("max_repeat", &self.max_repeat), ("fn_count", &self.fn_count)] {
            for (v, c) in h {
                w.write_record([v.to_string(), c.to_string(), series.to_string()])
                    .map_err(err)?;
            }
        }
        w.flush().map_err(|e| Error::Write(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, source_name: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            value: u64,
            count: u64,
            series: String,
        }
        let mut h = RepeatHistograms::default();
        for (i, r) in crate::table::read_rows::<Row, _>(reader, source_name)?.into_iter().enumerate() {
            let target = match r.series.as_str() {
                "max_repeat" => &mut h.max_repeat,
                "fn_count" => &mut h.fn_count,
                other => {
                    return Err(Error::Csv {
                        source_name: source_name.to_string(),
                        row: i + 2,
                        message: format!("unknown series {other:?}"),
                    })
                }
            };
            *target.entry(r.value).or_insert(0) += r.count;
        }
        Ok(h)
    }
}

pub fn histogram_total(h: &BTreeMap<u64, u64>) -> u64 {
    h.values().sum()
}

/// Fraction of the histogram's mass at `value`.
pub fn mass_at(h: &BTreeMap<u64, u64>, value: u64) -> f64 {
    let total = histogram_total(h);
    if total == 0 {
        return 0.0;
    }
    h.get(&value).copied().unwrap_or(0) as f64 / total as f64
}

/// Smallest value whose cumulative fraction reaches `q`.
pub fn histogram_quantile(h: &BTreeMap<u64, u64>, q: f64) -> Option<u64> {
    let total = histogram_total(h);
    if total == 0 {
        return None;
    }
    let target = q * total as f64;
    let mut acc = 0u64;
    for (&v, &c) in h {
        acc += c;
        if acc as f64 >= target {
            return Some(v);
        }
    }
    h.keys().next_back().copied()
}

/// Per (run, document): the document's maximum surrogate repeat size over
/// its critical chains, and its FN count at `fner`. Consistent's repeat size
/// is recorded as 1. Documents without critical mentions are skipped.
pub fn repeat_size_histogram(
    dist: &PhiDistribution,
    strategy: &StrategyConfig,
    fner: f64,
    runs: usize,
) -> RepeatHistograms {
    let corpus = dist.prepare();
    let master = derive_seed(strategy.seed, "histogram");
    (0..runs)
        .into_par_iter()
        .map(|run| {
            let seed = derive_index(master, run as u64);
            let mut sampler = ChainSampler::new(strategy.pool_size);
            let mut h = RepeatHistograms::default();
            for (d, doc) in corpus.docs.iter().enumerate() {
                let total: u64 = doc.chains.iter().sum();
                if total == 0 {
                    continue;
                }
                let mut rng = rng_from(derive_index(seed, d as u64));
                let f = inject_fn(total, fner, &mut rng);
                let m = if strategy.kind == StrategyKind::Consistent {
                    1
                } else {
                    doc.chains
                        .iter()
                        .map(|&n| sampler.max_repeat(n as usize, strategy.p_new, &mut rng, None) as u64)
                        .max()
                        .unwrap_or(0)
                };
                *h.max_repeat.entry(m).or_insert(0) += 1;
                *h.fn_count.entry(f).or_insert(0) += 1;
            }
            h
        })
        .reduce(RepeatHistograms::default, RepeatHistograms::merge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::StrategyConfig;

    fn uniform(n_docs: usize, n: u64) -> PhiDistribution {
        PhiDistribution::new(
            (0..n_docs)
                .map(|i| PhiEntry {
                    doc_id: format!("d{i}"),
                    patient_id: format!("p{}", i / 2),
                    category: "PATIENT".into(),
                    critical: true,
                    mention_count: n,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn binomial_moments() {
        let mut rng = rng_from(1);
        let draws: Vec<f64> = (0..200_000).map(|_| inject_fn(100, 0.05, &mut rng) as f64).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!((mean - 5.0).abs() < 0.02, "{mean}");
        assert!((var - 4.75).abs() < 0.06, "{var}");
        assert_eq!(inject_fn(0, 0.3, &mut rng), 0);
        assert_eq!(inject_fn(1000, 1e-12, &mut rng), 0);
        // underflow path still gives a plausible count
        let big = inject_fn(10_000_000, 0.5, &mut rng);
        assert!((4_990_000..=5_010_000).contains(&big), "{big}");
    }

    #[test]
    fn quantile_is_monotone_in_p() {
        for u in [0.0, 0.1, 0.5, 0.9, 0.999] {
            let mut prev = 0;
            for p in [0.001, 0.005, 0.01, 0.05, 0.2] {
                let k = binomial_quantile(200, p, u).unwrap();
                assert!(k >= prev);
                prev = k;
            }
        }
    }

    #[test]
    fn leak_predicate_truth_table() {
        for f in 0..6u64 {
            for m in 0..6u64 {
                assert_eq!(doc_leak(StrategyKind::Consistent, f, m), f >= 1);
                for kind in [StrategyKind::Random, StrategyKind::Markov, StrategyKind::Custom] {
                    assert_eq!(doc_leak(kind, f, m), f > m);
                }
            }
        }
        assert!(!doc_leak(StrategyKind::Markov, 3, 3));
        assert!(doc_leak(StrategyKind::Random, 2, 1));
    }

    #[test]
    fn consistent_matches_closed_form() {
        let dist = uniform(200, 10);
        let cfg = SimConfig::new(0.05, 1000, StrategyConfig::of(StrategyKind::Consistent, 3), Accounting::Pooled).unwrap();
        let s = simulate(&dist, &cfg).unwrap();
        let expect = 1.0 - 0.95f64.powi(10);
        assert!((expect - 0.4013).abs() < 1e-4);
        assert!((s.doc_leak_rate - expect).abs() < 3.0 * s.doc_leak_stderr, "{} vs {expect}", s.doc_leak_rate);
        // two docs per patient
        let pat = 1.0 - (1.0 - expect).powi(2);
        assert!((s.patient_leak_rate - pat).abs() < 3.0 * s.patient_leak_stderr);
    }

    #[test]
    fn determinism_and_single_run() {
        let dist = uniform(20, 30);
        let cfg = SimConfig::new(0.05, 1, StrategyConfig::of(StrategyKind::Markov, 9), Accounting::Pooled).unwrap();
        let a = simulate(&dist, &cfg).unwrap();
        let b = simulate(&dist, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.doc_leak_rate, a.doc_leaks[0] as f64 / 20.0);
    }

    #[test]
    fn config_validation() {
        let s = StrategyConfig::of(StrategyKind::Random, 0);
        assert!(SimConfig::new(0.0, 10, s, Accounting::Pooled).is_err());
        assert!(SimConfig::new(1.0, 10, s, Accounting::Pooled).is_err());
        assert!(SimConfig::new(0.1, 0, s, Accounting::Pooled).is_err());
        assert!(simulate(&PhiDistribution::default(), &SimConfig::new(0.1, 1, s, Accounting::Pooled).unwrap()).is_err());
    }

    // Exact leak probability for one chain of n ≤ 4 mentions: enumerate every
    // FN count and every chain path (new/repeat choices and pool indices).
    fn exact_leak(n: usize, fner: f64, p_new: f64, k: usize, kind: StrategyKind) -> f64 {
        fn paths(n: usize, p_new: f64, k: usize, prefix: &mut Vec<usize>, prob: f64, out: &mut Vec<(f64, usize)>) {
            if prefix.len() == n {
                let mut counts = vec![0; k];
                for &i in prefix.iter() {
                    counts[i] += 1;
                }
                out.push((prob, *counts.iter().max().unwrap()));
                return;
            }
            if !prefix.is_empty() && p_new < 1.0 {
                let last = *prefix.last().unwrap();
                prefix.push(last);
                paths(n, p_new, k, prefix, prob * (1.0 - p_new), out);
                prefix.pop();
            }
            let p_fresh = if prefix.is_empty() { 1.0 } else { p_new };
            if p_fresh > 0.0 {
                for i in 0..k {
                    prefix.push(i);
                    paths(n, p_new, k, prefix, prob * p_fresh / k as f64, out);
                    prefix.pop();
                }
            }
        }
        let mut dist = Vec::new();
        paths(n, p_new, k, &mut Vec::new(), 1.0, &mut dist);
        let binom = |f: usize| {
            let c = (0..f).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
            c * fner.powi(f as i32) * (1.0 - fner).powi((n - f) as i32)
        };
        let mut total = 0.0;
        for f in 0..=n {
            for &(p, m) in &dist {
                if doc_leak(kind, f as u64, m as u64) {
                    total += binom(f) * p;
                }
            }
        }
        total
    }

    #[test]
    fn small_documents_match_exhaustive_enumeration() {
        let fner = 0.3;
        for n in 1..=4u64 {
            for (kind, p_new) in [
                (StrategyKind::Consistent, 0.0),
                (StrategyKind::Random, 1.0),
                (StrategyKind::Markov, 0.5),
            ] {
                let k = 3;
                let strat = StrategyConfig::new(kind, None, k, 17).unwrap();
                let cfg = SimConfig::new(fner, 400, strat, Accounting::Pooled).unwrap();
                let s = simulate(&uniform(100, n), &cfg).unwrap();
                let exact = exact_leak(n as usize, fner, p_new, k, kind);
                let slack = 3.0 * s.doc_leak_stderr + 1e-12;
                assert!(
                    (s.doc_leak_rate - exact).abs() <= slack,
                    "n={n} {kind}: {} vs {exact} ± {slack}",
                    s.doc_leak_rate
                );
            }
        }
    }

    #[test]
    fn patient_rollup_is_or() {
        // one patient with a leaking and a non-leaking document
        let dist = PhiDistribution::new(vec![
            PhiEntry {
                doc_id: "a".into(),
                patient_id: "p".into(),
                category: "X".into(),
                critical: true,
                mention_count: 500,
            },
            PhiEntry {
                doc_id: "b".into(),
                patient_id: "p".into(),
                category: "X".into(),
                critical: false,
                mention_count: 5,
            },
        ])
        .unwrap();
        let cfg = SimConfig::new(0.5, 5, StrategyConfig::of(StrategyKind::Consistent, 0), Accounting::Pooled).unwrap();
        let s = simulate(&dist, &cfg).unwrap();
        assert_eq!(s.n_docs, 2);
        assert_eq!(s.doc_leak_rate, 0.5);
        assert_eq!(s.patient_leak_rate, 1.0);
    }

    #[test]
    fn per_type_accounting_is_stricter_or_equal_for_consistent() {
        let mut entries = Vec::new();
        for i in 0..50 {
            for cat in ["PATIENT", "MEDICAL_RECORD"] {
                entries.push(PhiEntry {
                    doc_id: format!("d{i}"),
                    patient_id: format!("d{i}"),
                    category: cat.into(),
                    critical: true,
                    mention_count: 8,
                });
            }
        }
        let dist = PhiDistribution::new(entries).unwrap();
        let strat = StrategyConfig::of(StrategyKind::Consistent, 2);
        let pooled = simulate(&dist, &SimConfig::new(0.05, 300, strat, Accounting::Pooled).unwrap()).unwrap();
        let per = simulate(&dist, &SimConfig::new(0.05, 300, strat, Accounting::PerType).unwrap()).unwrap();
        let expect = 1.0 - 0.95f64.powi(16);
        for s in [&pooled, &per] {
            assert!((s.doc_leak_rate - expect).abs() < 3.0 * s.doc_leak_stderr);
        }
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let dist = uniform(3, 4);
        let mut buf = Vec::new();
        dist.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("doc_id,patient_id,category,critical,mention_count\n"));
        assert_eq!(PhiDistribution::read_csv(&buf[..], "x").unwrap(), dist);

        let bad = "doc_id,patient_id,category,critical,mention_count\nd,p,X,true,2\nd,p,Y,maybe,2\n";
        assert!(matches!(PhiDistribution::read_csv(bad.as_bytes(), "f"), Err(Error::Csv { row: 3, .. })));
        let zero = "doc_id,patient_id,category,critical,mention_count\nd,p,X,1,0\n";
        assert!(matches!(PhiDistribution::read_csv(zero.as_bytes(), "f"), Err(Error::Csv { row: 2, .. })));
        let dup = "doc_id,patient_id,category,critical,mention_count\nd,p,X,1,1\nd,p,X,0,3\n";
        assert!(matches!(PhiDistribution::read_csv(dup.as_bytes(), "f"), Err(Error::Csv { row: 3, .. })));
    }

    #[test]
    fn summaries_round_trip() {
        let dist = uniform(10, 5);
        let cfg = SimConfig::new(0.01, 10, StrategyConfig::of(StrategyKind::Random, 1), Accounting::Pooled).unwrap();
        let s = simulate(&dist, &cfg).unwrap();
        let mut buf = Vec::new();
        write_summaries(&mut buf, std::slice::from_ref(&s)).unwrap();
        let back = read_summaries(&buf[..], "x").unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].strategy, "random");
        assert!((back[0].doc_leak_rate - s.doc_leak_rate).abs() < 1e-6);
    }

    #[test]
    fn histograms() {
        let dist = uniform(50, 6);
        let h = repeat_size_histogram(&dist, &StrategyConfig::of(StrategyKind::Consistent, 0), 0.01, 20);
        assert_eq!(h.max_repeat.keys().copied().collect::<Vec<_>>(), vec![1]);
        assert_eq!(histogram_total(&h.fn_count), 1000);
        let r = repeat_size_histogram(&dist, &StrategyConfig::of(StrategyKind::Random, 0), 0.01, 200);
        assert!(mass_at(&r.max_repeat, 1) > 0.97);
        let empty = repeat_size_histogram(&PhiDistribution::default(), &StrategyConfig::of(StrategyKind::Random, 0), 0.01, 5);
        assert!(empty.max_repeat.is_empty() && empty.fn_count.is_empty());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("value,count,series\n"));
        assert_eq!(RepeatHistograms::read_csv(&buf[..], "h").unwrap(), r);
        let bad = "value,count,series\n1,2,other\n";
        assert!(matches!(RepeatHistograms::read_csv(bad.as_bytes(), "h"), Err(Error::Csv { row: 2, .. })));

        let q: BTreeMap<u64, u64> = [(1, 50), (2, 25), (3, 25)].into();
        assert_eq!(histogram_quantile(&q, 0.5), Some(1));
        assert_eq!(histogram_quantile(&q, 0.75), Some(2));
        assert_eq!(histogram_quantile(&q, 0.76), Some(3));
    }
}
