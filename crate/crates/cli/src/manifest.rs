//! Run manifests and small output helpers shared by the subcommands.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, ResultExt};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

/// Facts about one execution that do not affect its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Runtime {
    pub jobs: usize,
    pub wall_seconds: f64,
    pub phases: Vec<Phase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    /// `flag`, `config` or `entropy`.
    pub seed_source: String,
    /// Fully resolved subcommand configuration; loadable with `--config`.
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    /// Files written, relative to the output directory.
    pub outputs: Vec<PathBuf>,
    pub counts: BTreeMap<String, u64>,
    pub warnings: BTreeMap<String, u64>,
    pub runtime: Runtime,
}

impl RunManifest {
    pub fn read(path: &Path) -> CliResult<Self> {
        let raw = std::fs::read_to_string(path).ctx(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&raw).map_err(|e| CliError::input(anyhow::anyhow!("{}: {e}", path.display())))
    }
}

/// Per-phase wall-clock timer.
#[derive(Debug)]
pub struct Phases {
    start: Instant,
    phases: Vec<Phase>,
}

impl Default for Phases {
    fn default() -> Self {
        Phases {
            start: Instant::now(),
            phases: Vec::new(),
        }
    }
}

impl Phases {
    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.phases.push(Phase {
            name: name.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn record(&mut self, name: &str, seconds: f64) {
        self.phases.push(Phase {
            name: name.to_string(),
            seconds,
        });
    }

    pub fn seconds(&self, name: &str) -> f64 {
        self.phases.iter().filter(|p| p.name == name).map(|p| p.seconds).sum()
    }

    pub fn finish(self, jobs: usize) -> Runtime {
        Runtime {
            jobs,
            wall_seconds: self.start.elapsed().as_secs_f64(),
            phases: self.phases,
        }
    }
}

/// Whatever a subcommand reports back for its manifest.
#[derive(Debug, Default)]
pub struct Outcome {
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub counts: BTreeMap<String, u64>,
    pub warnings: BTreeMap<String, u64>,
}

impl Outcome {
    pub fn count(&mut self, key: &str, n: u64) {
        self.counts.insert(key.to_string(), n);
    }
}

/// Writes `bytes` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(parent).ctx(|| format!("creating {}", parent.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(parent).ctx(|| format!("writing into {}", parent.display()))?;
    tmp.write_all(bytes).ctx(|| format!("writing {}", path.display()))?;
    tmp.persist(path)
        .map_err(|e| e.error)
        .ctx(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Renders with a core CSV writer and stores the result at `out/name`.
pub fn write_csv_output(
    out: &Path,
    name: &str,
    outcome: &mut Outcome,
    render: impl FnOnce(&mut Vec<u8>) -> hipsynth_core::Result<()>,
) -> CliResult<()> {
    let mut buf = Vec::new();
    render(&mut buf).ctx(|| format!("rendering {name}"))?;
    write_atomic(&out.join(name), &buf)?;
    outcome.outputs.push(PathBuf::from(name));
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("configuration serializes")
}
