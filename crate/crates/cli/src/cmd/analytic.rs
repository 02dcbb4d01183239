//! `hipsynth analytic`: binomial leak probabilities over synthetic corpora.

use std::path::PathBuf;

use clap::Args;
use hipsynth_core::analytic::{
    default_doc_grid, estimate_threshold, published_threshold, sweep, write_sweep, SweepPreset, DEFAULT_THRESHOLD_DRAWS,
};
use hipsynth_core::seed::derive_seed;
use hipsynth_core::strategy::{StrategyConfig, StrategyKind};
use hipsynth_core::surrogate::DEFAULT_POOL_SIZE;
use serde::{Deserialize, Serialize};

use super::RunContext;
use crate::config::{overlay, require};
use crate::error::{CliError, CliResult};
use crate::manifest::{to_json, write_csv_output, Outcome, Phases};

pub const ANALYTIC_FILE: &str = "analytic.csv";
pub const THRESHOLDS_FILE: &str = "thresholds.csv";

const DEFAULT_TRIALS: usize = 100_000;

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticArgs {
    /// Corpus sizes [default: 30 log-spaced sizes from 10 to 10000].
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub docs: Option<Vec<u64>>,
    /// Entities per document [default: preset values].
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epd: Option<Vec<u64>>,
    /// False negative error rates [default: preset values].
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fner: Option<Vec<f64>>,
    /// NAME[=VALUE], repeatable. A known strategy name without a value uses
    /// its published threshold. When given, only these rows are produced
    /// [default: consistent, random and markov].
    #[arg(long, value_name = "NAME[=VALUE]")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<Vec<String>>,
    /// Grid preset: wide, low-rate or high-rate [default: wide].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Same as --preset low-rate.
    #[arg(long, alias = "fig4-1pct", conflicts_with_all = ["preset", "high_rate"])]
    #[serde(skip)]
    pub low_rate: bool,
    /// Same as --preset high-rate.
    #[arg(long, alias = "fig4-5pct", conflicts_with = "preset")]
    #[serde(skip)]
    pub high_rate: bool,
    /// Also estimate each strategy's threshold by simulation.
    #[arg(long)]
    pub estimate: bool,
    /// Monte-Carlo trials for --estimate [default: 100000].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

pub fn parse_preset(name: &str) -> CliResult<SweepPreset> {
    match name.to_ascii_lowercase().as_str() {
        "wide" => Ok(SweepPreset::Wide),
        "low-rate" => Ok(SweepPreset::LowRate),
        "high-rate" => Ok(SweepPreset::HighRate),
        other => Err(CliError::usage(format!(
            "unknown preset {other:?} (expected wide, low-rate or high-rate)"
        ))),
    }
}

/// Parses `NAME[=VALUE]`.
pub fn parse_threshold(s: &str) -> CliResult<(String, f64)> {
    let (name, value) = match s.split_once('=') {
        Some((n, v)) => (n.trim(), Some(v.trim())),
        None => (s.trim(), None),
    };
    if name.is_empty() {
        return Err(CliError::usage(format!("--threshold {s:?}: missing name")));
    }
    let t = match value {
        Some(v) => v
            .parse::<f64>()
            .ok()
            .filter(|t| t.is_finite() && *t >= 0.0)
            .ok_or_else(|| CliError::usage(format!("--threshold {s:?}: value must be a non-negative number")))?,
        None => name
            .parse::<StrategyKind>()
            .ok()
            .and_then(published_threshold)
            .ok_or_else(|| CliError::usage(format!("--threshold {s:?}: no published value for {name}")))?,
    };
    Ok((name.to_string(), t))
}

/// Resolved arguments, the named thresholds and the output directory.
pub type Resolved = (AnalyticArgs, Vec<(String, f64)>, PathBuf);

impl AnalyticArgs {
    pub fn merge(mut self, mut file: AnalyticArgs) -> Self {
        if self.low_rate {
            self.preset = Some("low-rate".into());
        } else if self.high_rate {
            self.preset = Some("high-rate".into());
        }
        overlay!(self, file; docs, epd, fner, threshold, preset, trials, out);
        self.estimate |= file.estimate;
        self
    }

    pub fn resolve(mut self) -> CliResult<Resolved> {
        let preset = parse_preset(self.preset.get_or_insert_with(|| "wide".into()))?;
        self.docs.get_or_insert_with(default_doc_grid);
        self.epd.get_or_insert_with(|| preset.entities_per_doc().to_vec());
        self.fner.get_or_insert_with(|| preset.fners().to_vec());
        let thresholds: Vec<(String, f64)> = match &self.threshold {
            Some(list) => list.iter().map(|s| parse_threshold(s)).collect::<CliResult<_>>()?,
            None => StrategyKind::ALL
                .iter()
                .map(|k| (k.to_string(), published_threshold(*k).expect("fixed kinds")))
                .collect(),
        };
        // record the resolved values so the manifest is self-contained
        self.threshold = Some(thresholds.iter().map(|(n, t)| format!("{n}={t}")).collect());
        if self.estimate {
            self.trials.get_or_insert(DEFAULT_TRIALS);
        }
        self.low_rate = false;
        self.high_rate = false;
        for (flag, empty) in [
            ("docs", self.docs.as_ref().is_some_and(Vec::is_empty)),
            ("epd", self.epd.as_ref().is_some_and(Vec::is_empty)),
            ("fner", self.fner.as_ref().is_some_and(Vec::is_empty)),
            ("threshold", thresholds.is_empty()),
        ] {
            if empty {
                return Err(CliError::usage(format!("--{flag} needs at least one value")));
            }
        }
        if let Some(f) = self.fner.as_ref().and_then(|v| v.iter().find(|f| !(0.0..=1.0).contains(*f))) {
            return Err(CliError::usage(format!("--fner {f} is outside [0, 1]")));
        }
        let out = require(self.out.clone(), "out")?;
        Ok((self, thresholds, out))
    }
}

pub fn run(args: AnalyticArgs, ctx: RunContext, phases: &mut Phases) -> CliResult<(PathBuf, Outcome)> {
    let (resolved, thresholds, out) = args.resolve()?;
    let mut outcome = Outcome {
        config: to_json(&resolved),
        ..Outcome::default()
    };
    let rows = phases.time("sweep", || {
        sweep(
            resolved.epd.as_deref().unwrap_or_default(),
            resolved.fner.as_deref().unwrap_or_default(),
            &thresholds,
            resolved.docs.as_deref().unwrap_or_default(),
        )
    })?;
    write_csv_output(&out, ANALYTIC_FILE, &mut outcome, |w| write_sweep(w, &rows))?;
    outcome.count("rows", rows.len() as u64);
    println!("analytic: {} rows -> {}", rows.len(), out.join(ANALYTIC_FILE).display());

    if resolved.estimate {
        let trials = resolved.trials.expect("resolved");
        let estimates: Vec<(StrategyKind, f64)> = phases.time("estimate", || {
            StrategyKind::ALL
                .iter()
                .map(|&k| {
                    let s = StrategyConfig::of(k, ctx.seed);
                    let seed = derive_seed(ctx.seed, k.as_str());
                    (k, estimate_threshold(&s, DEFAULT_POOL_SIZE, DEFAULT_THRESHOLD_DRAWS, trials, seed))
                })
                .collect()
        });
        write_csv_output(&out, THRESHOLDS_FILE, &mut outcome, |w| write_estimates(w, &estimates))?;
        for (k, e) in &estimates {
            println!("{k:<12} estimated threshold {e:.4} (published {})", published_threshold(*k).expect("fixed kinds"));
        }
    }
    Ok((out, outcome))
}

/// strategy,published,estimate
fn write_estimates<W: std::io::Write>(writer: W, rows: &[(StrategyKind, f64)]) -> hipsynth_core::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| hipsynth_core::Error::Write(e.to_string());
    w.write_record(["strategy", "published", "estimate"]).map_err(err)?;
    for (k, e) in rows {
        let published = published_threshold(*k).expect("fixed kinds");
        w.write_record([k.to_string(), published.to_string(), format!("{e:.6}")]).map_err(err)?;
    }
    w.flush().map_err(|e| hipsynth_core::Error::Write(e.to_string()))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub strategy: String,
    pub published: f64,
    pub estimate: f64,
}

pub fn read_estimates<R: std::io::Read>(reader: R, source_name: &str) -> hipsynth_core::Result<Vec<EstimateRow>> {
    hipsynth_core::table::read_rows(reader, source_name)
}
