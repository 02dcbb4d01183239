//! `hipsynth resynth`: rewrite a BRAT corpus with surrogate PHI.

use std::path::{Path, PathBuf};

use clap::Args;
use hipsynth_core::brat::DocumentBundle;
use hipsynth_core::report::{write_report, Warning};
use hipsynth_core::rewrite::{apply_plan, write_bundle};
use hipsynth_core::seed::{derive_seed, rng_from};
use hipsynth_core::strategy::{plan_document, scope_policy, OffsetPolicyTemplate, PoolSet, StrategyConfig, StrategyKind};
use hipsynth_core::surrogate::{DateOrder, OffsetScope, Surrogates, DEFAULT_POOL_SIZE};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{load_corpus, warning_counts, RunContext};
use crate::config::{overlay, require};
use crate::error::{CliError, CliResult, ResultExt};
use crate::manifest::{to_json, write_atomic, Outcome, Phases};

pub const REPORT_FILE: &str = "report.csv";

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResynthArgs {
    /// Input corpus: `.ann` files with optional `.txt` siblings, any depth.
    #[arg(long = "in", value_name = "DIR")]
    #[serde(rename = "in", skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Output directory; mirrors the input tree.
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// consistent, random, markov or custom.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategyKind>,
    /// Probability of drawing a fresh surrogate (custom strategy).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_new: Option<f64>,
    /// Distinct surrogates per category [default: 1000].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pool_size: Option<usize>,
    /// CSV with columns doc_id,patient_id.
    #[arg(long, value_name = "CSV")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patients: Option<PathBuf>,
    /// corpus, patient or document [default: patient].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset_scope: Option<OffsetScope>,
    /// Reading of numeric dates: month-first or day-first [default: month-first].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub date_order: Option<DateOrder>,
    /// TOML file adding or overriding category generators.
    #[arg(long, value_name = "TOML")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub registry: Option<PathBuf>,
    /// Directory of `<KEY>.txt` word lists replacing built-in vocabularies.
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vocab_dir: Option<PathBuf>,
    /// Report unreadable documents and continue instead of failing.
    #[arg(long)]
    pub skip_bad_docs: bool,
}

impl ResynthArgs {
    pub fn merge(mut self, mut file: ResynthArgs) -> Self {
        overlay!(self, file; input, out, strategy, p_new, pool_size, patients, offset_scope, date_order, registry, vocab_dir);
        self.skip_bad_docs |= file.skip_bad_docs;
        self
    }

    /// Applies defaults; the result is what the manifest records.
    pub fn resolve(mut self) -> CliResult<(ResynthArgs, ResynthJob)> {
        let kind = *self.strategy.get_or_insert(StrategyKind::Markov);
        let pool_size = *self.pool_size.get_or_insert(DEFAULT_POOL_SIZE);
        let scope = *self.offset_scope.get_or_insert(OffsetScope::default());
        let date_order = *self.date_order.get_or_insert(DateOrder::default());
        let strategy = StrategyConfig::new(kind, self.p_new, pool_size, 0)?;
        self.p_new = Some(strategy.p_new);
        let job = ResynthJob {
            input: require(self.input.clone(), "in")?,
            out: require(self.out.clone(), "out")?,
            strategy,
            patients: self.patients.clone(),
            template: OffsetPolicyTemplate { scope, date_order },
            registry: self.registry.clone(),
            vocab_dir: self.vocab_dir.clone(),
            skip_bad_docs: self.skip_bad_docs,
        };
        Ok((self, job))
    }
}

#[derive(Debug, Clone)]
pub struct ResynthJob {
    pub input: PathBuf,
    pub out: PathBuf,
    /// The seed field is replaced by the run seed.
    pub strategy: StrategyConfig,
    pub patients: Option<PathBuf>,
    pub template: OffsetPolicyTemplate,
    pub registry: Option<PathBuf>,
    pub vocab_dir: Option<PathBuf>,
    pub skip_bad_docs: bool,
}

#[derive(Debug, Default)]
pub struct ResynthStats {
    pub discovered: usize,
    pub documents: usize,
    pub skipped: usize,
    pub annotations: usize,
    pub replaced: usize,
    pub input_chars: usize,
    pub warnings: Vec<Warning>,
    pub outputs: Vec<PathBuf>,
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

fn rewrite_one(
    bundle: &DocumentBundle,
    job: &ResynthJob,
    strategy: &StrategyConfig,
    surrogates: &Surrogates,
    pools: &PoolSet,
    seed: u64,
) -> CliResult<(usize, Vec<Warning>, PathBuf, Option<PathBuf>)> {
    let policy = scope_policy(bundle, &job.template, derive_seed(seed, "offsets"));
    let mut rng = rng_from(derive_seed(seed, &format!("document/{}", bundle.doc_id)));
    let doc = || format!("document {}", bundle.doc_id);
    let plan = plan_document(bundle, strategy, surrogates, pools, &policy, &mut rng).ctx(doc)?;
    let (rewritten, mut warnings) = apply_plan(bundle, &plan).ctx(doc)?;
    let (ann, txt) = write_bundle(&rewritten, &job.out).ctx(doc)?;
    let mut all = plan.warnings;
    all.append(&mut warnings);
    Ok((plan.assignments.len(), all, ann, txt))
}

/// Loads, plans, rewrites and writes every document, then the warnings
/// report. Output depends only on the job and `seed`.
pub fn run_pipeline(job: &ResynthJob, seed: u64, phases: &mut Phases) -> CliResult<ResynthStats> {
    std::fs::create_dir_all(&job.out).ctx(|| format!("creating {}", job.out.display()))?;
    if same_dir(&job.input, &job.out) {
        return Err(CliError::usage("--out must differ from --in; the source corpus is never modified"));
    }
    let corpus = phases.time("load", || load_corpus(&job.input, job.patients.as_deref(), job.skip_bad_docs))?;
    let surrogates = Surrogates::load(job.registry.as_deref(), job.vocab_dir.as_deref()).ctx(|| "loading surrogate data")?;
    let strategy = StrategyConfig { seed, ..job.strategy };
    let pools = phases
        .time("pools", || PoolSet::build(&surrogates, strategy.pool_size, derive_seed(seed, "pools")))
        .ctx(|| "building surrogate pools")?;

    let results: Vec<_> = phases.time("rewrite", || {
        corpus
            .bundles
            .par_iter()
            .map(|b| rewrite_one(b, job, &strategy, &surrogates, &pools, seed))
            .collect()
    });

    let mut stats = ResynthStats {
        discovered: corpus.discovered,
        documents: corpus.bundles.len(),
        skipped: corpus.skipped,
        annotations: corpus.bundles.iter().map(|b| b.annotations.len()).sum(),
        input_chars: corpus.bundles.iter().map(|b| b.text.as_ref().map_or(0, |t| t.len())).sum(),
        warnings: corpus.warnings,
        ..ResynthStats::default()
    };
    for r in results {
        let (replaced, warnings, ann, txt) = r?;
        stats.replaced += replaced;
        stats.warnings.extend(warnings);
        for p in std::iter::once(ann).chain(txt) {
            stats.outputs.push(p.strip_prefix(&job.out).map(Path::to_path_buf).unwrap_or(p));
        }
    }
    // loading warnings come first in discovery order; keep the report grouped by document
    stats.warnings.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));

    phases.time("report", || {
        let mut buf = Vec::new();
        write_report(&mut buf, &stats.warnings).map_err(|e| CliError::internal(anyhow::anyhow!("report: {e}")))?;
        write_atomic(&job.out.join(REPORT_FILE), &buf)
    })?;
    stats.outputs.push(PathBuf::from(REPORT_FILE));
    Ok(stats)
}

pub fn run(args: ResynthArgs, ctx: RunContext, phases: &mut Phases) -> CliResult<(PathBuf, Outcome)> {
    let (resolved, job) = args.resolve()?;
    let stats = run_pipeline(&job, ctx.seed, phases)?;
    println!(
        "resynth: {} documents ({} skipped), {} annotations replaced, {} warnings -> {}",
        stats.documents,
        stats.skipped,
        stats.replaced,
        stats.warnings.len(),
        job.out.display()
    );
    let mut outcome = Outcome {
        config: to_json(&resolved),
        inputs: std::iter::once(job.input.clone()).chain(job.patients.clone()).collect(),
        outputs: stats.outputs.clone(),
        warnings: warning_counts(&stats.warnings),
        ..Outcome::default()
    };
    outcome.count("documents_discovered", stats.discovered as u64);
    outcome.count("documents_written", stats.documents as u64);
    outcome.count("documents_skipped", stats.skipped as u64);
    outcome.count("annotations", stats.annotations as u64);
    outcome.count("annotations_replaced", stats.replaced as u64);
    Ok((job.out, outcome))
}
