//! Synthetic per-document critical-entity counts from summary statistics.
//!
//! Counts follow a log-normal truncated to `[min - 0.5, max + 0.5]` and
//! rounded. For each σ the location μ is solved so the truncated median hits
//! the target median; σ is then the smallest value whose truncated mean hits
//! the target mean.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{PhiDistribution, PhiEntry};
use crate::error::{Error, Result};
use crate::seed::{derive_index, rng_from};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthTargets {
    pub mean: f64,
    pub median: f64,
    pub min: u64,
    pub max: u64,
}

/// Critical entities per document, all UAB notes.
pub const UAB_TARGETS: SynthTargets = SynthTargets {
    mean: 388.5,
    median: 224.0,
    min: 2,
    max: 2545,
};

/// Critical entities per MIMIC discharge summary.
pub const MIMIC_TARGETS: SynthTargets = SynthTargets {
    mean: 6.8,
    median: 5.0,
    min: 2,
    max: 76,
};

const MAX_ATTEMPTS: u64 = 64;
const TOLERANCE: f64 = 0.10;

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid")
}

struct Fit {
    mu: f64,
    sigma: f64,
    lo: f64,
    hi: f64,
}

impl Fit {
    fn probs(&self) -> (f64, f64) {
        let n = std_normal();
        (n.cdf((self.lo - self.mu) / self.sigma), n.cdf((self.hi - self.mu) / self.sigma))
    }

    fn mean(&self) -> f64 {
        let n = std_normal();
        let s = self.sigma;
        let (pa, pb) = self.probs();
        let num = n.cdf((self.hi - self.mu - s * s) / s) - n.cdf((self.lo - self.mu - s * s) / s);
        (self.mu + s * s / 2.0).exp() * num / (pb - pa)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, min: u64, max: u64) -> u64 {
        let (pa, pb) = self.probs();
        let u: f64 = rng.random();
        let p = (pa + u * (pb - pa)).clamp(1e-300, 1.0 - 1e-16);
        let x = (self.mu + self.sigma * std_normal().inverse_cdf(p)).exp();
        (x.round() as u64).clamp(min, max)
    }
}

fn bisect(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn fit_for_sigma(t: &SynthTargets, sigma: f64) -> Fit {
    let lo = (t.min as f64 - 0.5).max(1e-9).ln();
    let hi = (t.max as f64 + 0.5).ln();
    let lm = t.median.ln();
    let n = std_normal();
    // truncated CDF at the median minus one half, decreasing in mu
    let g = |mu: f64| {
        let (pa, pb) = (n.cdf((lo - mu) / sigma), n.cdf((hi - mu) / sigma));
        (n.cdf((lm - mu) / sigma) - pa) / (pb - pa) - 0.5
    };
    let mu = bisect(lo, hi, g);
    Fit { mu, sigma, lo, hi }
}

fn fit(t: &SynthTargets) -> Result<Fit> {
    let sigmas: Vec<f64> = (1..=600).map(|i| i as f64 * 0.01).collect();
    let diff = |s: f64| fit_for_sigma(t, s).mean() - t.mean;
    let mut prev = sigmas[0];
    let mut prev_d = diff(prev);
    if prev_d >= 0.0 {
        return Ok(fit_for_sigma(t, bisect(1e-6, prev, diff)));
    }
    for &s in &sigmas[1..] {
        let d = diff(s);
        if d.is_finite() && d >= 0.0 {
            return Ok(fit_for_sigma(t, bisect(prev, s, diff)));
        }
        prev = s;
        prev_d = d;
    }
    Err(Error::Infeasible(format!(
        "no truncated log-normal on [{}, {}] with median {} reaches mean {} (closest {:.3})",
        t.min,
        t.max,
        t.median,
        t.mean,
        t.mean + prev_d
    )))
}

fn median_of(sorted: &[u64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    }
}

/// `n_docs` documents with one critical `CRITICAL` entry each, grouped into
/// patients of `docs_per_patient` consecutive documents. Samples are redrawn
/// from derived seeds until the sample mean and median are both within 10%
/// of their targets.
pub fn synth_distribution(
    targets: SynthTargets,
    n_docs: usize,
    docs_per_patient: usize,
    seed: u64,
) -> Result<PhiDistribution> {
    let t = targets;
    if t.min == 0 {
        return Err(Error::Infeasible("minimum count must be at least 1".into()));
    }
    if !(t.min as f64 <= t.median && t.median <= t.max as f64) {
        return Err(Error::Infeasible(format!(
            "median {} outside [{}, {}]",
            t.median, t.min, t.max
        )));
    }
    if !(t.min as f64 <= t.mean && t.mean <= t.max as f64) {
        return Err(Error::Infeasible(format!("mean {} outside [{}, {}]", t.mean, t.min, t.max)));
    }
    if n_docs == 0 || docs_per_patient == 0 {
        return Err(Error::Config("n_docs and docs_per_patient must be at least 1".into()));
    }

    let counts = if t.min == t.max {
        vec![t.min; n_docs]
    } else {
        let f = fit(&t)?;
        let mut accepted = None;
        for attempt in 0..MAX_ATTEMPTS {
            let mut rng = rng_from(derive_index(seed, attempt));
            let c: Vec<u64> = (0..n_docs).map(|_| f.sample(&mut rng, t.min, t.max)).collect();
            let mean = c.iter().sum::<u64>() as f64 / n_docs as f64;
            let mut sorted = c.clone();
            sorted.sort_unstable();
            let median = median_of(&sorted);
            if (mean - t.mean).abs() <= TOLERANCE * t.mean && (median - t.median).abs() <= TOLERANCE * t.median {
                accepted = Some(c);
                break;
            }
        }
        accepted.ok_or_else(|| {
            Error::Infeasible(format!(
                "{MAX_ATTEMPTS} samples of {n_docs} documents all missed the mean/median targets by more than 10%"
            ))
        })?
    };

    let width = n_docs.to_string().len().max(5);
    let pwidth = n_docs.div_ceil(docs_per_patient).to_string().len().max(4);
    let entries = counts
        .into_iter()
        .enumerate()
        .map(|(i, n)| PhiEntry {
            doc_id: format!("doc{:0width$}", i + 1),
            patient_id: format!("pat{:0pwidth$}", i / docs_per_patient + 1),
            category: "CRITICAL".into(),
            critical: true,
            mention_count: n,
        })
        .collect();
    PhiDistribution::new(entries)
}
