//! `hipsynth simulate`: Monte-Carlo leakage under FN injection.

use std::path::PathBuf;

use clap::Args;
use hipsynth_core::leakage::{
    repeat_size_histogram, simulate, synth_distribution, write_summaries, Accounting, LeakSummary, PhiDistribution,
    SimConfig, SynthTargets, DEFAULT_RUNS, MIMIC_TARGETS, DEFAULT_FNERS, UAB_TARGETS,
};
use hipsynth_core::seed::derive_seed;
use hipsynth_core::strategy::{StrategyConfig, StrategyKind};
use hipsynth_core::surrogate::DEFAULT_POOL_SIZE;
use serde::{Deserialize, Serialize};

use super::RunContext;
use crate::config::{overlay, require};
use crate::error::{CliError, CliResult, ResultExt};
use crate::manifest::{to_json, write_csv_output, Outcome, Phases};

pub const LEAKAGE_FILE: &str = "leakage.csv";
pub const RUNS_FILE: &str = "runs.csv";
pub const DISTRIBUTION_FILE: &str = "distribution.csv";

/// Synthetic-corpus presets.
pub fn synth_preset(name: &str) -> CliResult<(SynthTargets, usize, usize)> {
    match name.to_ascii_lowercase().as_str() {
        // 3,617 notes over 165 patients
        "uab" => Ok((UAB_TARGETS, 3617, 22)),
        "mimic" => Ok((MIMIC_TARGETS, 2000, 1)),
        other => Err(CliError::usage(format!("unknown --synth preset {other:?} (expected uab or mimic)"))),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    /// PHI distribution CSV: doc_id,patient_id,category,critical,mention_count.
    #[arg(long, value_name = "CSV")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist: Option<PathBuf>,
    /// Simulate a synthetic distribution instead: uab or mimic.
    #[arg(long, value_name = "PRESET", conflicts_with = "dist")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<String>,
    /// Documents in the synthetic distribution [default: preset size].
    #[arg(long, value_name = "N")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth_docs: Option<usize>,
    /// Consecutive synthetic documents per patient [default: preset value].
    #[arg(long, value_name = "N")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub docs_per_patient: Option<usize>,
    /// False negative error rates [default: 0.001,0.005,0.01,0.05].
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fner: Option<Vec<f64>>,
    /// Strategies [default: consistent,random,markov].
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Vec<StrategyKind>>,
    /// Fresh-draw probability for the custom strategy.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_new: Option<f64>,
    /// Surrogate pool size [default: 1000].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pool_size: Option<usize>,
    /// Simulation runs per (strategy, FNER) [default: 1000].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    /// pooled or per-type [default: pooled].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accounting: Option<Accounting>,
    /// Also write max-repeat / FN-count histograms per (strategy, FNER).
    #[arg(long)]
    pub histograms: bool,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl SimulateArgs {
    pub fn merge(mut self, mut file: SimulateArgs) -> Self {
        overlay!(self, file; dist, synth, synth_docs, docs_per_patient, fner, strategy, p_new, pool_size, runs, accounting, out);
        self.histograms |= file.histograms;
        self
    }

    pub fn resolve(mut self) -> CliResult<(SimulateArgs, PathBuf)> {
        if self.dist.is_some() == self.synth.is_some() {
            return Err(CliError::usage("give exactly one of --dist or --synth"));
        }
        if let Some(name) = &self.synth {
            let (_, docs, dpp) = synth_preset(name)?;
            self.synth = Some(name.to_ascii_lowercase());
            self.synth_docs.get_or_insert(docs);
            self.docs_per_patient.get_or_insert(dpp);
        } else if self.synth_docs.is_some() || self.docs_per_patient.is_some() {
            return Err(CliError::usage("--synth-docs and --docs-per-patient apply only with --synth"));
        }
        self.fner.get_or_insert_with(|| DEFAULT_FNERS.to_vec());
        self.strategy.get_or_insert_with(|| StrategyKind::ALL.to_vec());
        self.pool_size.get_or_insert(DEFAULT_POOL_SIZE);
        self.runs.get_or_insert(DEFAULT_RUNS);
        self.accounting.get_or_insert(Accounting::default());
        if self.fner.as_ref().is_some_and(Vec::is_empty) {
            return Err(CliError::usage("--fner needs at least one rate"));
        }
        if self.strategy.as_ref().is_some_and(Vec::is_empty) {
            return Err(CliError::usage("--strategy needs at least one strategy"));
        }
        let out = require(self.out.clone(), "out")?;
        Ok((self, out))
    }
}

fn fner_tag(f: f64) -> String {
    f.to_string().replace('.', "p")
}

pub fn run(args: SimulateArgs, ctx: RunContext, phases: &mut Phases) -> CliResult<(PathBuf, Outcome)> {
    let (resolved, out) = args.resolve()?;
    let mut outcome = Outcome {
        config: to_json(&resolved),
        ..Outcome::default()
    };

    let dist = match (&resolved.dist, &resolved.synth) {
        (Some(path), _) => {
            outcome.inputs.push(path.clone());
            phases.time("load", || PhiDistribution::from_path(path)).ctx(|| "reading distribution")?
        }
        (None, Some(name)) => {
            let (targets, _, _) = synth_preset(name)?;
            let docs = resolved.synth_docs.expect("resolved");
            let dpp = resolved.docs_per_patient.expect("resolved");
            let dist = phases
                .time("synthesize", || synth_distribution(targets, docs, dpp, derive_seed(ctx.seed, "synth")))
                .ctx(|| format!("synthesizing the {name} distribution"))?;
            write_csv_output(&out, DISTRIBUTION_FILE, &mut outcome, |w| dist.write_csv(w))?;
            dist
        }
        (None, None) => unreachable!("resolve checks the source"),
    };
    if dist.is_empty() {
        return Err(CliError::input(anyhow::anyhow!("the distribution has no entries")));
    }

    let runs = resolved.runs.expect("resolved");
    let accounting = resolved.accounting.expect("resolved");
    let pool = resolved.pool_size.expect("resolved");
    let mut configs = Vec::new();
    for &kind in resolved.strategy.as_deref().unwrap_or_default() {
        let p = if kind == StrategyKind::Custom { resolved.p_new } else { None };
        // one seed for all strategies: common random numbers sharpen comparisons
        configs.push(StrategyConfig::new(kind, p, pool, ctx.seed)?);
    }
    let fners = resolved.fner.clone().unwrap_or_default();
    let mut rows: Vec<LeakSummary> = Vec::new();
    phases.time("simulate", || -> CliResult<()> {
        for s in &configs {
            for &f in &fners {
                let cfg = SimConfig::new(f, runs, *s, accounting)?;
                rows.push(simulate(&dist, &cfg)?);
            }
        }
        Ok(())
    })?;
    write_csv_output(&out, LEAKAGE_FILE, &mut outcome, |w| write_summaries(w, &rows))?;
    write_csv_output(&out, RUNS_FILE, &mut outcome, |w| write_runs(w, &rows))?;

    if resolved.histograms {
        phases.time("histograms", || -> CliResult<()> {
            for s in &configs {
                for &f in &fners {
                    let h = repeat_size_histogram(&dist, s, f, runs);
                    let name = format!("histogram_{}_{}.csv", s.kind, fner_tag(f));
                    write_csv_output(&out, &name, &mut outcome, |w| h.write_csv(w))?;
                }
            }
            Ok(())
        })?;
    }

    for r in &rows {
        println!(
            "{:<12} fner={:<6} doc_leak={:.4} (±{:.4}) patient_leak={:.4} (±{:.4})",
            r.strategy, r.fner, r.doc_leak_rate, r.doc_leak_stderr, r.patient_leak_rate, r.patient_leak_stderr
        );
    }
    outcome.count("entries", dist.len() as u64);
    outcome.count("documents", rows.first().map_or(0, |r| r.n_docs) as u64);
    outcome.count("patients", rows.first().map_or(0, |r| r.n_patients) as u64);
    outcome.count("rows", rows.len() as u64);
    Ok((out, outcome))
}

/// Per-run leak counts: strategy,fner,run,doc_leaks,patient_leaks.
pub fn write_runs<W: std::io::Write>(writer: W, rows: &[LeakSummary]) -> hipsynth_core::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| hipsynth_core::Error::Write(e.to_string());
    w.write_record(["strategy", "fner", "run", "doc_leaks", "patient_leaks"]).map_err(err)?;
    for r in rows {
        for (i, (d, p)) in r.doc_leaks.iter().zip(&r.patient_leaks).enumerate() {
            w.write_record([r.strategy.clone(), r.fner.to_string(), i.to_string(), d.to_string(), p.to_string()])
                .map_err(err)?;
        }
    }
    w.flush().map_err(|e| hipsynth_core::Error::Write(e.to_string()))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub strategy: String,
    pub fner: f64,
    pub run: usize,
    pub doc_leaks: u32,
    pub patient_leaks: u32,
}

pub fn read_runs<R: std::io::Read>(reader: R, source_name: &str) -> hipsynth_core::Result<Vec<RunRow>> {
    hipsynth_core::table::read_rows(reader, source_name)
}
