//! Configuration files.
//!
//! A config file is TOML with optional top-level `seed` and `jobs` keys and
//! one table per subcommand whose keys are the subcommand's long flags with
//! dashes written as underscores:
//!
//! ```toml
//! seed = 7
//! jobs = 4
//!
//! [resynth]
//! in = "corpus"
//! out = "resynth-out"
//! strategy = "markov"
//! offset_scope = "patient"
//!
//! [simulate]
//! synth = "uab"
//! fner = [0.001, 0.01]
//! strategy = ["consistent", "markov"]
//! ```
//!
//! A run manifest (`manifest.json`) is accepted in place of a TOML file and
//! reproduces that run. Relative paths resolve against the working directory.
//! Command-line flags override file values, which override built-in defaults.

use std::path::Path;

use serde::Deserialize;

use crate::cmd::{analytic::AnalyticArgs, bench::BenchArgs, resynth::ResynthArgs, simulate::SimulateArgs, stats::StatsArgs};
use crate::error::{CliError, CliResult, ResultExt};
use crate::manifest::RunManifest;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub resynth: ResynthArgs,
    pub simulate: SimulateArgs,
    pub analytic: AnalyticArgs,
    pub stats: StatsArgs,
    pub bench: BenchArgs,
}

impl ConfigFile {
    pub fn from_toml_str(s: &str) -> CliResult<Self> {
        toml::from_str(s).map_err(|e| CliError::usage(format!("config: {e}")))
    }

    pub fn from_manifest(m: &RunManifest) -> CliResult<Self> {
        let mut c = ConfigFile {
            seed: Some(m.seed),
            ..ConfigFile::default()
        };
        let bad = |e: serde_json::Error| CliError::usage(format!("manifest config: {e}"));
        match m.subcommand.as_str() {
            "resynth" => c.resynth = serde_json::from_value(m.config.clone()).map_err(bad)?,
            "simulate" => c.simulate = serde_json::from_value(m.config.clone()).map_err(bad)?,
            "analytic" => c.analytic = serde_json::from_value(m.config.clone()).map_err(bad)?,
            "stats" => c.stats = serde_json::from_value(m.config.clone()).map_err(bad)?,
            "bench" => c.bench = serde_json::from_value(m.config.clone()).map_err(bad)?,
            other => return Err(CliError::usage(format!("manifest names unknown subcommand {other:?}"))),
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        if path.extension().is_some_and(|x| x == "json") {
            return ConfigFile::from_manifest(&RunManifest::read(path)?);
        }
        let raw = std::fs::read_to_string(path).ctx(|| format!("reading {}", path.display()))?;
        ConfigFile::from_toml_str(&raw).map_err(|e| e.context(path.display().to_string()))
    }
}

/// Fills every `None` field of `$flags` from `$file`.
macro_rules! overlay {
    ($flags:expr, $file:expr; $($field:ident),* $(,)?) => {
        $(
            if $flags.$field.is_none() {
                $flags.$field = $file.$field.take();
            }
        )*
    };
}
pub(crate) use overlay;

pub fn require<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::usage(format!("--{flag} is required (flag or config file)")))
}
