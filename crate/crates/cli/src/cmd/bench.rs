//! `hipsynth bench`: end-to-end resynthesis throughput on a generated corpus.

use std::path::{Path, PathBuf};

use clap::Args;
use hipsynth_core::rewrite::write_bundle;
use hipsynth_core::seed::{derive_seed, fnv1a};
use hipsynth_core::strategy::{OffsetPolicyTemplate, StrategyConfig, StrategyKind};
use hipsynth_core::surrogate::{Vocabulary, DEFAULT_POOL_SIZE};
use hipsynth_core::synthetic::{synthetic_corpus, NoteShape, BENCH_ENTITIES_PER_DOC, BENCH_WORDS_PER_DOC};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::resynth::{run_pipeline, ResynthJob};
use super::{warning_counts, RunContext};
use crate::config::{overlay, require};
use crate::error::{CliError, CliResult, ResultExt};
use crate::manifest::{to_json, write_atomic, write_csv_output, Outcome, Phases};

pub const BENCH_FILE: &str = "bench.csv";
pub const DEFAULT_BENCH_DOCS: usize = 1000;

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchArgs {
    /// Documents to generate [default: 1000].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub docs: Option<usize>,
    /// Words per document [default: 1136].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub words_per_doc: Option<usize>,
    /// Annotated entities per document; 0 measures plain copying [default: 60].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entities_per_doc: Option<usize>,
    /// Strategy used for the rewrite [default: markov].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategyKind>,
    /// Fresh-draw probability for the custom strategy.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_new: Option<f64>,
    /// Surrogate pool size [default: 1000].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pool_size: Option<usize>,
    /// Add multi-byte text and punctuation-adjacent mentions to the notes.
    #[arg(long)]
    pub fuzz: bool,
    /// Keep the generated and rewritten corpora here instead of a temporary directory.
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub work_dir: Option<PathBuf>,
    /// Output directory for the report.
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl BenchArgs {
    pub fn merge(mut self, mut file: BenchArgs) -> Self {
        overlay!(self, file; docs, words_per_doc, entities_per_doc, strategy, p_new, pool_size, work_dir, out);
        self.fuzz |= file.fuzz;
        self
    }

    fn resolve(mut self) -> CliResult<(BenchArgs, StrategyConfig, NoteShape, PathBuf)> {
        let docs = *self.docs.get_or_insert(DEFAULT_BENCH_DOCS);
        if docs == 0 {
            return Err(CliError::usage("--docs must be at least 1"));
        }
        let shape = NoteShape {
            words_per_doc: *self.words_per_doc.get_or_insert(BENCH_WORDS_PER_DOC),
            entities_per_doc: *self.entities_per_doc.get_or_insert(BENCH_ENTITIES_PER_DOC),
            fuzz: self.fuzz,
        };
        let kind = *self.strategy.get_or_insert(StrategyKind::Markov);
        let pool = *self.pool_size.get_or_insert(DEFAULT_POOL_SIZE);
        let strategy = StrategyConfig::new(kind, self.p_new, pool, 0)?;
        self.p_new = Some(strategy.p_new);
        let out = require(self.out.clone(), "out")?;
        Ok((self, strategy, shape, out))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub docs: usize,
    pub words: usize,
    pub entities: usize,
    /// FNV-1a over the rewritten corpus; equal digests mean identical output.
    pub output_digest: String,
    pub seconds: f64,
    pub docs_per_sec: f64,
    pub entities_per_sec: f64,
    pub words_per_sec: f64,
}

/// Order-independent of the file system: paths are visited sorted.
pub fn corpus_digest(root: &Path) -> CliResult<u64> {
    let mut files: Vec<PathBuf> = WalkDir::new(root)
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .collect();
    files.sort();
    let mut acc = Vec::with_capacity(files.len() * 16);
    for f in files {
        let rel = f.strip_prefix(root).unwrap_or(&f).to_string_lossy().replace('\\', "/");
        let body = std::fs::read(&f).ctx(|| format!("reading {}", f.display()))?;
        acc.extend_from_slice(&fnv1a(rel.as_bytes()).to_le_bytes());
        acc.extend_from_slice(&fnv1a(&body).to_le_bytes());
    }
    Ok(fnv1a(&acc))
}

pub fn run(args: BenchArgs, ctx: RunContext, phases: &mut Phases) -> CliResult<(PathBuf, Outcome)> {
    let (resolved, strategy, shape, out) = args.resolve()?;
    let n_docs = resolved.docs.expect("resolved");
    let tmp;
    let work = match &resolved.work_dir {
        Some(d) => d.clone(),
        None => {
            tmp = tempfile::tempdir().ctx(|| "creating a temporary directory")?;
            tmp.path().to_path_buf()
        }
    };
    let corpus_dir = work.join("corpus");
    let rewritten_dir = work.join("resynth");
    for d in [&corpus_dir, &rewritten_dir] {
        if d.exists() {
            std::fs::remove_dir_all(d).ctx(|| format!("clearing {}", d.display()))?;
        }
    }

    let bundles = phases.time("generate", || {
        synthetic_corpus(n_docs, &shape, &Vocabulary::builtin(), derive_seed(ctx.seed, "bench-corpus"))
    });
    let words: usize = bundles
        .iter()
        .map(|b| b.text.as_deref().map_or(0, |t| t.split_whitespace().count()))
        .sum();
    let entities: usize = bundles.iter().map(|b| b.annotations.len()).sum();
    let patients_csv = work.join("patients.csv");
    phases.time("write-corpus", || -> CliResult<()> {
        bundles
            .par_iter()
            .try_for_each(|b| write_bundle(b, &corpus_dir).map(|_| ()))
            .ctx(|| "writing the generated corpus")?;
        let mut csv = String::from("doc_id,patient_id\n");
        for b in &bundles {
            csv.push_str(&format!("{},{}\n", b.doc_id, b.patient_key()));
        }
        write_atomic(&patients_csv, csv.as_bytes())
    })?;
    drop(bundles);

    let job = ResynthJob {
        input: corpus_dir,
        out: rewritten_dir.clone(),
        strategy,
        patients: Some(patients_csv),
        template: OffsetPolicyTemplate::default(),
        registry: None,
        vocab_dir: None,
        skip_bad_docs: false,
    };
    let mut inner = Phases::default();
    let stats = run_pipeline(&job, ctx.seed, &mut inner)?;
    let seconds: f64 = ["load", "pools", "rewrite", "report"].iter().map(|p| inner.seconds(p)).sum();
    for p in inner.finish(ctx.jobs).phases {
        phases.record(&format!("resynth-{}", p.name), p.seconds);
    }
    let digest = phases.time("digest", || corpus_digest(&rewritten_dir))?;

    let rate = |n: usize| if seconds > 0.0 { n as f64 / seconds } else { f64::INFINITY };
    let report = BenchReport {
        docs: stats.documents,
        words,
        entities,
        output_digest: format!("{digest:016x}"),
        seconds,
        docs_per_sec: rate(stats.documents),
        entities_per_sec: rate(entities),
        words_per_sec: rate(words),
    };
    let mut outcome = Outcome {
        config: to_json(&resolved),
        warnings: warning_counts(&stats.warnings),
        ..Outcome::default()
    };
    write_csv_output(&out, BENCH_FILE, &mut outcome, |w| write_bench(w, &report))?;
    outcome.count("documents", report.docs as u64);
    outcome.count("words", words as u64);
    outcome.count("entities", entities as u64);
    outcome.count("annotations_replaced", stats.replaced as u64);
    println!(
        "bench: {} docs, {} words, {} entities in {:.3}s: {:.1} docs/s, {:.0} entities/s",
        report.docs, report.words, report.entities, report.seconds, report.docs_per_sec, report.entities_per_sec
    );
    Ok((out, outcome))
}

fn write_bench<W: std::io::Write>(writer: W, r: &BenchReport) -> hipsynth_core::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.serialize(r).map_err(|e| hipsynth_core::Error::Write(e.to_string()))?;
    w.flush().map_err(|e| hipsynth_core::Error::Write(e.to_string()))?;
    Ok(())
}

pub fn read_bench<R: std::io::Read>(reader: R) -> CliResult<BenchReport> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize()
        .next()
        .ok_or_else(|| CliError::input(anyhow::anyhow!("bench report is empty")))?
        .map_err(|e| CliError::input(anyhow::anyhow!("bench report: {e}")))
}
