//! Closed-form leakage for synthetic corpora.
//!
//! A corpus of `n_docs` documents with `entities_per_doc` critical entities
//! each holds `N = n_docs × entities_per_doc` entities, of which
//! `X ~ Binomial(N, fner)` are missed. The corpus leaks when `X` exceeds the
//! strategy's threshold.

use std::io::{Read, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from};
use crate::special::binomial_sf;
use crate::strategy::{StrategyConfig, StrategyKind};

pub const THRESHOLD_CONSISTENT: f64 = 0.0;
pub const THRESHOLD_RANDOM: f64 = 1.015;
pub const THRESHOLD_MARKOV: f64 = 2.028;

/// Mentions per document assumed by [`estimate_threshold`] by default: the
/// six-mention note used to illustrate the strategies.
pub const DEFAULT_THRESHOLD_DRAWS: usize = 6;

pub fn published_threshold(kind: StrategyKind) -> Option<f64> {
    match kind {
        StrategyKind::Consistent => Some(THRESHOLD_CONSISTENT),
        StrategyKind::Random => Some(THRESHOLD_RANDOM),
        StrategyKind::Markov => Some(THRESHOLD_MARKOV),
        StrategyKind::Custom => None,
    }
}

/// Each strategy with its published threshold, in declaration order.
pub fn published_thresholds() -> Vec<(String, f64)> {
    StrategyKind::ALL
        .iter()
        .map(|k| (k.to_string(), published_threshold(*k).expect("fixed kinds")))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticQuery {
    pub n_docs: u64,
    pub entities_per_doc: u64,
    pub fner: f64,
    pub threshold: f64,
}

impl AnalyticQuery {
    pub fn new(n_docs: u64, entities_per_doc: u64, fner: f64, threshold: f64) -> Result<Self> {
        if n_docs.checked_mul(entities_per_doc).is_none_or(|n| n == 0) {
            return Err(Error::Config(format!(
                "total entities must be at least 1 (got {n_docs} documents × {entities_per_doc} entities)"
            )));
        }
        if !(0.0..=1.0).contains(&fner) {
            return Err(Error::Config(format!("FNER must lie in [0, 1], got {fner}")));
        }
        if !(threshold >= 0.0 && threshold.is_finite()) {
            return Err(Error::Config(format!("threshold must be a finite non-negative number, got {threshold}")));
        }
        Ok(AnalyticQuery {
            n_docs,
            entities_per_doc,
            fner,
            threshold,
        })
    }

    pub fn total_entities(&self) -> u64 {
        self.n_docs * self.entities_per_doc
    }
}

/// Expected number of missed real entities in the corpus.
pub fn expected_real(q: &AnalyticQuery) -> f64 {
    q.fner * q.entities_per_doc as f64 * q.n_docs as f64
}

/// `P(X > threshold)`.
pub fn leak_probability(q: &AnalyticQuery) -> Result<f64> {
    binomial_sf(q.total_entities(), q.fner, q.threshold)
}

/// `P(X > t)` by summing the binomial pmf in log space. Linear in `n`; meant
/// for `n` up to about 10^4.
pub fn binomial_sf_by_summation(n: u64, p: f64, t: f64) -> f64 {
    if t < 0.0 {
        return 1.0;
    }
    let k0 = t.floor() as u64 + 1;
    if k0 > n || p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return 1.0;
    }
    let mut ln_fact = Vec::with_capacity(n as usize + 1);
    ln_fact.push(0.0f64);
    for i in 1..=n {
        ln_fact.push(ln_fact[i as usize - 1] + (i as f64).ln());
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let ln_pmf = |k: u64| {
        ln_fact[n as usize] - ln_fact[k as usize] - ln_fact[(n - k) as usize] + k as f64 * lp + (n - k) as f64 * lq
    };
    // normalize by the total so rounding drift in the log-factorials cancels
    let terms: Vec<f64> = (0..=n).map(ln_pmf).collect();
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = terms.iter().map(|t| (t - m).exp()).collect();
    let total: f64 = w.iter().sum();
    let upper: f64 = w[k0 as usize..].iter().sum();
    let lower: f64 = w[..k0 as usize].iter().sum();
    if upper <= lower {
        upper / total
    } else {
        1.0 - lower / total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub strategy: String,
    pub fner: f64,
    pub entities_per_doc: u64,
    pub n_docs: u64,
    pub leak_probability: f64,
}

/// Every (strategy, fner, entities per document, corpus size) cell, in that
/// nesting order.
pub fn sweep(
    entity_counts: &[u64],
    fners: &[f64],
    thresholds: &[(String, f64)],
    doc_grid: &[u64],
) -> Result<Vec<SweepRow>> {
    if entity_counts.is_empty() || fners.is_empty() || thresholds.is_empty() || doc_grid.is_empty() {
        return Err(Error::Config("every sweep grid needs at least one value".into()));
    }
    let mut cells = Vec::new();
    for (name, t) in thresholds {
        for &f in fners {
            for &e in entity_counts {
                for &d in doc_grid {
                    cells.push((name.clone(), AnalyticQuery::new(d, e, f, *t)?));
                }
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(strategy, q)| {
            Ok(SweepRow {
                strategy,
                fner: q.fner,
                entities_per_doc: q.entities_per_doc,
                n_docs: q.n_docs,
                leak_probability: leak_probability(&q)?,
            })
        })
        .collect()
}

pub fn write_sweep<W: Write>(writer: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Write(e.to_string());
    w.write_record(["strategy", "fner", "entities_per_doc", "n_docs", "leak_probability"])
        .map_err(err)?;
    for r in rows {
        w.write_record([
            r.strategy.clone(),
            r.fner.to_string(),
            r.entities_per_doc.to_string(),
            r.n_docs.to_string(),
            format!("{:.12e}", r.leak_probability),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Write(e.to_string()))?;
    Ok(())
}

pub fn read_sweep<R: Read>(reader: R, source_name: &str) -> Result<Vec<SweepRow>> {
    crate::table::read_rows(reader, source_name)
}

/// `n` integer points log-spaced over `[lo, hi]`, rounded and de-duplicated.
pub fn log_grid(lo: u64, hi: u64, n: usize) -> Vec<u64> {
    if n <= 1 || lo >= hi {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp().round() as u64)
        .collect();
    out.dedup();
    out
}

/// Monte-Carlo estimate of a strategy's expected maximum surrogate
/// multiplicity in an `n_draws`-mention document.
///
/// The estimate is the product of two expectations: the largest number of
/// times one pool value is selected among `n_draws` fresh uniform draws from
/// `pool_size` values, and the expected number of mentions the chain spends
/// on a value each time it is selected (the expected visits to the transient
/// "repeat" state plus the visit that selected it, `1 / p_new`). A chain that
/// never draws fresh values (`p_new = 0`) repeats one value `n_draws` times.
pub fn estimate_threshold(strategy: &StrategyConfig, pool_size: usize, n_draws: usize, trials: usize, seed: u64) -> f64 {
    if strategy.p_new <= 0.0 {
        return n_draws as f64;
    }
    if n_draws == 0 || trials == 0 {
        return 0.0;
    }
    let k = pool_size.max(1);
    let mut rng = rng_from(derive_seed(seed, "threshold/selections"));
    let mut counts = vec![0u32; k];
    let mut picked = Vec::with_capacity(n_draws);
    let mut max_sum = 0u64;
    for _ in 0..trials {
        let mut best = 0;
        for _ in 0..n_draws {
            let i = rng.random_range(0..k);
            if counts[i] == 0 {
                picked.push(i);
            }
            counts[i] += 1;
            best = best.max(counts[i]);
        }
        for &i in &picked {
            counts[i] = 0;
        }
        picked.clear();
        max_sum += best as u64;
    }
    let selections = max_sum as f64 / trials as f64;

    let mut rng = rng_from(derive_seed(seed, "threshold/visits"));
    let mut visits = 0u64;
    for _ in 0..trials {
        visits += 1;
        while strategy.p_new < 1.0 && !rng.random_bool(strategy.p_new) {
            visits += 1;
        }
    }
    selections * (visits as f64 / trials as f64)
}

/// Entities-per-document and FNER grids for the synthetic-corpus sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepPreset {
    /// 15, 150 or 300 entities per document at 1% FNER.
    LowRate,
    /// 5, 25 or 50 entities per document at 5% FNER.
    HighRate,
    /// 15, 150 and 1500 entities per document at 1% and 5% FNER.
    Wide,
}

impl SweepPreset {
    pub fn entities_per_doc(self) -> &'static [u64] {
        match self {
            SweepPreset::LowRate => &[15, 150, 300],
            SweepPreset::HighRate => &[5, 25, 50],
            SweepPreset::Wide => &[15, 150, 1500],
        }
    }

    pub fn fners(self) -> &'static [f64] {
        match self {
            SweepPreset::LowRate => &[0.01],
            SweepPreset::HighRate => &[0.05],
            SweepPreset::Wide => &[0.01, 0.05],
        }
    }
}

/// Default corpus-size axis: 30 log-spaced sizes from 10 to 10,000.
pub fn default_doc_grid() -> Vec<u64> {
    log_grid(10, 10_000, 30)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn expected_real_products() {
        let q = AnalyticQuery::new(10, 15, 0.01, 0.0).unwrap();
        assert!((expected_real(&q) - 1.5).abs() < 1e-12);
        let q = AnalyticQuery::new(10_000, 1500, 0.01, 0.0).unwrap();
        assert!((expected_real(&q) - 150_000.0).abs() < 1e-6);
        assert!(AnalyticQuery::new(0, 15, 0.01, 0.0).is_err());
        assert!(AnalyticQuery::new(1, 1, 0.01, -1.0).is_err());
    }

    #[test]
    fn consistent_example() {
        let q = AnalyticQuery::new(10, 15, 0.01, 0.0).unwrap();
        let p = leak_probability(&q).unwrap();
        let closed = -(150.0 * (-0.01f64).ln_1p()).exp_m1();
        assert!((p - closed).abs() <= 1e-12 * closed);
        assert!((p - 0.7786).abs() < 1e-4);
    }

    #[test]
    fn random_example_against_summation() {
        let p = leak_probability(&AnalyticQuery::new(10, 15, 0.01, THRESHOLD_RANDOM).unwrap()).unwrap();
        // P(X ≥ 2) = 1 - P(0) - P(1)
        let p0 = 0.99f64.powi(150);
        let p1 = 150.0 * 0.01 * 0.99f64.powi(149);
        assert!((p - (1.0 - p0 - p1)).abs() < 1e-13);
        assert!((p - 0.443).abs() < 1e-3);
        assert!((binomial_sf_by_summation(150, 0.01, 1.015) - p).abs() < 1e-13);
    }

    #[test]
    fn threshold_at_or_above_n_is_zero() {
        let q = AnalyticQuery::new(1, 2, 0.5, 2.028).unwrap();
        assert_eq!(leak_probability(&q).unwrap(), 0.0);
    }

    #[test]
    fn fractional_thresholds_round_up_to_attainable_counts() {
        for n in [10u64, 150, 5000, 1_000_000] {
            for p in [0.001, 0.01, 0.05] {
                assert_eq!(binomial_sf(n, p, 1.015).unwrap(), binomial_sf(n, p, 1.0).unwrap());
                assert_eq!(binomial_sf(n, p, 2.028).unwrap(), binomial_sf(n, p, 2.0).unwrap());
            }
        }
    }

    #[test]
    fn summation_oracle_agrees() {
        for n in [1u64, 2, 7, 50, 333, 1000, 10_000] {
            for p in [1e-4, 0.001, 0.01, 0.05, 0.3, 0.9] {
                for t in [0.0, 1.015, 2.028, 5.0, (n / 2) as f64, n as f64 - 1.0] {
                    let a = binomial_sf(n, p, t).unwrap();
                    let b = binomial_sf_by_summation(n, p, t);
                    assert!((a - b).abs() < 1e-10, "n={n} p={p} t={t}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn large_n_is_stable() {
        let p = binomial_sf(15_000_000, 0.01, 2.028).unwrap();
        assert_eq!(p, 1.0);
        let tiny = binomial_sf(15_000_000, 1e-9, 2.028).unwrap();
        // λ = 0.015; P(X ≥ 3) ≈ λ^3/6
        assert!((tiny / (0.015f64.powi(3) / 6.0) - 1.0).abs() < 0.02, "{tiny}");
        let mid = binomial_sf(15_000_000, 0.01, 150_000.0).unwrap();
        assert!((0.45..0.5).contains(&mid), "{mid}");
    }

    #[test]
    fn sweep_shapes() {
        let rows = sweep(&[15, 150, 1500], &[0.01], &published_thresholds(), &default_doc_grid()).unwrap();
        assert_eq!(rows.len(), 3 * 3 * 30);
        let one = sweep(&[15], &[0.01], &[("consistent".into(), 0.0)], &[10]).unwrap();
        assert_eq!(one.len(), 1);
        assert!(sweep(&[], &[0.01], &published_thresholds(), &[10]).is_err());
        // Consistent reaches a given leak level at smaller corpora than Markov
        let at = |s: &str, d: u64| {
            rows.iter()
                .find(|r| r.strategy == s && r.entities_per_doc == 15 && r.n_docs == d)
                .unwrap()
                .leak_probability
        };
        assert!(at("consistent", 10) > at("random", 10));
        assert!(at("random", 10) > at("markov", 10));
        let mut buf = Vec::new();
        write_sweep(&mut buf, &rows).unwrap();
        let back = read_sweep(&buf[..], "x").unwrap();
        assert_eq!(back.len(), rows.len());
        assert!((back[5].leak_probability - rows[5].leak_probability).abs() <= 1e-11 * rows[5].leak_probability.max(1e-300));
    }

    #[test]
    fn grid() {
        let g = default_doc_grid();
        assert_eq!(g.len(), 30);
        assert_eq!((g[0], g[29]), (10, 10_000));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn threshold_estimates() {
        let est = |kind| estimate_threshold(&StrategyConfig::of(kind, 0), 1000, DEFAULT_THRESHOLD_DRAWS, 200_000, 11);
        assert_eq!(est(StrategyKind::Consistent), 6.0);
        let r = est(StrategyKind::Random);
        let m = est(StrategyKind::Markov);
        assert!((r - 1.0).abs() <= 0.05, "{r}");
        assert!((m - 2.0).abs() <= 0.1, "{m}");
        // exact expected maximum multiplicity of 6 draws from 1000 is about 1.0149
        assert!((r - 1.0149).abs() < 0.002, "{r}");
    }

    proptest! {
        #[test]
        fn monotone_in_n_p_and_t(n in 1u64..200_000, p in 1e-5f64..0.2, t in 0.0f64..50.0, dn in 1u64..1000, dp in 0.0f64..0.05, dt in 0.0f64..5.0) {
            let base = binomial_sf(n, p, t).unwrap();
            prop_assert!(binomial_sf(n + dn, p, t).unwrap() >= base - 1e-12);
            prop_assert!(binomial_sf(n, (p + dp).min(1.0), t).unwrap() >= base - 1e-12);
            prop_assert!(binomial_sf(n, p, t + dt).unwrap() <= base + 1e-12);
        }

        #[test]
        fn zero_threshold_is_closed_form(n in 1u64..1_000_000, p in 1e-7f64..0.5) {
            let a = binomial_sf(n, p, 0.0).unwrap();
            let closed = -(n as f64 * (-p).ln_1p()).exp_m1();
            prop_assert!((a - closed).abs() <= 1e-12 * closed, "{} vs {}", a, closed);
        }
    }
}
