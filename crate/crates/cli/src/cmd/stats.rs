//! `hipsynth stats`: critical-entity distribution of a corpus.

use std::path::PathBuf;

use clap::Args;
use hipsynth_core::leakage::{PhiDistribution, PhiEntry};
use hipsynth_core::stats::{corpus_stats, count_bundle, counts_from_distribution, format_table, write_doc_counts, write_stats};
use hipsynth_core::surrogate::Registry;
use serde::{Deserialize, Serialize};

use super::{load_corpus, warning_counts, RunContext};
use crate::config::{overlay, require};
use crate::error::{CliError, CliResult, ResultExt};
use crate::manifest::{to_json, write_csv_output, Outcome, Phases};

pub const STATS_FILE: &str = "stats.csv";
pub const DOC_COUNTS_FILE: &str = "doc_counts.csv";
pub const DISTRIBUTION_FILE: &str = "distribution.csv";

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsArgs {
    /// Corpus directory to count.
    #[arg(long = "in", value_name = "DIR")]
    #[serde(rename = "in", skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Or an existing PHI distribution CSV.
    #[arg(long, value_name = "CSV", conflicts_with = "input")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist: Option<PathBuf>,
    /// CSV with columns doc_id,patient_id.
    #[arg(long, value_name = "CSV")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patients: Option<PathBuf>,
    /// TOML file adding or overriding categories and their critical flags.
    #[arg(long, value_name = "TOML")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub registry: Option<PathBuf>,
    /// Report unreadable documents and continue instead of failing.
    #[arg(long)]
    pub skip_bad_docs: bool,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl StatsArgs {
    pub fn merge(mut self, mut file: StatsArgs) -> Self {
        overlay!(self, file; input, dist, patients, registry, out);
        self.skip_bad_docs |= file.skip_bad_docs;
        self
    }
}

pub fn run(args: StatsArgs, _ctx: RunContext, phases: &mut Phases) -> CliResult<(PathBuf, Outcome)> {
    let out = require(args.out.clone(), "out")?;
    let mut outcome = Outcome {
        config: to_json(&args),
        ..Outcome::default()
    };
    let (docs, export) = match (&args.input, &args.dist) {
        (Some(dir), None) => {
            outcome.inputs.push(dir.clone());
            outcome.inputs.extend(args.patients.clone());
            let registry = match &args.registry {
                Some(p) => Registry::builtin_with_overrides(p).ctx(|| format!("reading {}", p.display()))?,
                None => Registry::builtin(),
            };
            let corpus = phases.time("load", || load_corpus(dir, args.patients.as_deref(), args.skip_bad_docs))?;
            outcome.warnings = warning_counts(&corpus.warnings);
            outcome.count("documents_skipped", corpus.skipped as u64);
            let mut docs = Vec::with_capacity(corpus.bundles.len());
            let mut entries: Vec<PhiEntry> = Vec::new();
            for b in &corpus.bundles {
                let (d, e) = count_bundle(b, &registry);
                docs.push(d);
                entries.extend(e);
            }
            (docs, Some(PhiDistribution::new(entries).map_err(CliError::internal)?))
        }
        (None, Some(path)) => {
            if args.patients.is_some() {
                return Err(CliError::usage("--patients applies to --in; a distribution already names patients"));
            }
            outcome.inputs.push(path.clone());
            let dist = PhiDistribution::from_path(path).ctx(|| "reading distribution")?;
            (counts_from_distribution(&dist), None)
        }
        _ => return Err(CliError::usage("give exactly one of --in or --dist")),
    };
    let stats = corpus_stats(&docs).map_err(|e| CliError::input(anyhow::anyhow!("{e}")))?;
    if let Some(dist) = export {
        write_csv_output(&out, DISTRIBUTION_FILE, &mut outcome, |w| dist.write_csv(w))?;
    }
    write_csv_output(&out, STATS_FILE, &mut outcome, |w| write_stats(w, &stats))?;
    write_csv_output(&out, DOC_COUNTS_FILE, &mut outcome, |w| write_doc_counts(w, &docs))?;
    print!("{}", format_table(&stats));
    outcome.count("documents", stats.documents.n as u64);
    outcome.count("patients", stats.patients.n as u64);
    Ok((out, outcome))
}
