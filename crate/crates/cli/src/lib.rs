//! The `hipsynth` command line: resynthesis, leakage simulation, closed-form
//! analytics, corpus statistics and benchmarking.
//!
//! Every subcommand writes its CSV products and a `manifest.json` into its
//! `--out` directory. Exit codes: 0 success, 1 usage, 2 input error,
//! 3 internal error.

pub mod cmd;
pub mod config;
pub mod error;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cmd::analytic::AnalyticArgs;
use cmd::bench::BenchArgs;
use cmd::resynth::ResynthArgs;
use cmd::simulate::SimulateArgs;
use cmd::stats::StatsArgs;
use cmd::RunContext;
use config::ConfigFile;
use error::{CliError, CliResult};
use manifest::{write_atomic, Phases, RunManifest, MANIFEST_FILE};

#[derive(Debug, Parser)]
#[command(name = "hipsynth", version, about = "Surrogate PHI resynthesis and leakage risk analysis for BRAT corpora")]
pub struct Cli {
    /// TOML config file, or a previous run's manifest.json.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Master seed; drawn from system entropy and recorded when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; output does not depend on this [default: all cores].
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replace annotated PHI in a BRAT corpus with surrogates.
    Resynth(ResynthArgs),
    /// Simulate document and patient leakage under FN injection.
    Simulate(SimulateArgs),
    /// Closed-form leak probabilities over synthetic corpus sizes.
    Analytic(AnalyticArgs),
    /// Critical-entity statistics and a distribution export.
    Stats(StatsArgs),
    /// Resynthesis throughput on a generated corpus.
    Bench(BenchArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Resynth(_) => "resynth",
            Command::Simulate(_) => "simulate",
            Command::Analytic(_) => "analytic",
            Command::Stats(_) => "stats",
            Command::Bench(_) => "bench",
        }
    }
}

/// Parses arguments and runs; returns the manifest that was written.
pub fn execute(cli: Cli) -> CliResult<RunManifest> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let (seed, seed_source) = match (cli.seed, file.seed) {
        (Some(s), _) => (s, "flag"),
        (None, Some(s)) => (s, "config"),
        (None, None) => (rand::random::<u64>(), "entropy"),
    };
    let jobs = cli.jobs.or(file.jobs).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(CliError::internal)?;
    let ctx = RunContext {
        seed,
        jobs: pool.current_num_threads(),
    };
    let subcommand = cli.command.name();
    let mut phases = Phases::default();
    let (out, outcome) = pool.install(|| match cli.command {
        Command::Resynth(a) => cmd::resynth::run(a.merge(file.resynth), ctx, &mut phases),
        Command::Simulate(a) => cmd::simulate::run(a.merge(file.simulate), ctx, &mut phases),
        Command::Analytic(a) => cmd::analytic::run(a.merge(file.analytic), ctx, &mut phases),
        Command::Stats(a) => cmd::stats::run(a.merge(file.stats), ctx, &mut phases),
        Command::Bench(a) => cmd::bench::run(a.merge(file.bench), ctx, &mut phases),
    })?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: subcommand.to_string(),
        seed,
        seed_source: seed_source.to_string(),
        config: outcome.config,
        inputs: outcome.inputs,
        outputs: outcome.outputs,
        counts: outcome.counts,
        warnings: outcome.warnings,
        runtime: phases.finish(ctx.jobs),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(CliError::internal)?;
    write_atomic(&out.join(MANIFEST_FILE), format!("{json}\n").as_bytes())?;
    Ok(manifest)
}

/// Entry point shared by the binary and tests.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
