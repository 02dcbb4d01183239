pub mod analytic;
pub mod bench;
pub mod resynth;
pub mod simulate;
pub mod stats;

use std::collections::BTreeMap;
use std::path::Path;

use hipsynth_core::brat::DocumentBundle;
use hipsynth_core::corpus::{discover, load_entry, load_patient_manifest};
use hipsynth_core::report::{EventKind, Warning};
use rayon::prelude::*;

use crate::error::{CliError, CliResult, ResultExt};

/// Seed and worker count shared by every subcommand.
#[derive(Debug, Clone, Copy)]
pub struct RunContext {
    pub seed: u64,
    pub jobs: usize,
}

pub struct LoadedCorpus {
    pub bundles: Vec<DocumentBundle>,
    pub warnings: Vec<Warning>,
    pub discovered: usize,
    pub skipped: usize,
}

/// Loads every document under `input` in parallel. A document that fails to
/// load aborts the run naming its file, or with `skip_bad` is reported as a
/// `skipped_document` event.
pub fn load_corpus(input: &Path, patients: Option<&Path>, skip_bad: bool) -> CliResult<LoadedCorpus> {
    if !input.is_dir() {
        return Err(CliError::input(anyhow::anyhow!("{} is not a directory", input.display())));
    }
    let entries = discover(input).ctx(|| format!("scanning {}", input.display()))?;
    let manifest = patients
        .map(|p| load_patient_manifest(p).ctx(|| format!("reading patient manifest {}", p.display())))
        .transpose()?;
    let loaded: Vec<_> = entries
        .par_iter()
        .map(|e| (e, load_entry(e, manifest.as_ref())))
        .collect();
    let mut out = LoadedCorpus {
        bundles: Vec::with_capacity(loaded.len()),
        warnings: Vec::new(),
        discovered: entries.len(),
        skipped: 0,
    };
    for (entry, result) in loaded {
        match result {
            Ok((bundle, warnings)) => {
                out.bundles.push(bundle);
                out.warnings.extend(warnings);
            }
            Err(e) if skip_bad => {
                out.skipped += 1;
                out.warnings.push(Warning::new(
                    &entry.doc_id,
                    EventKind::SkippedDocument,
                    format!("{}: {e}", entry.ann_path.display()),
                ));
            }
            Err(e) => {
                return Err(CliError::from(e).context(format!("loading {}", entry.ann_path.display())));
            }
        }
    }
    Ok(out)
}

pub fn warning_counts(warnings: &[Warning]) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for w in warnings {
        *counts.entry(w.event.to_string()).or_insert(0) += 1;
    }
    counts
}
