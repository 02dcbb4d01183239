//! Helpers for the acceptance suite.
//!
//! The suite drives the command-line interface as a child process. Rather than
//! locating a separately built `hipsynth` binary, the test executable re-runs
//! itself with [`CLI_ENV`] set and hands its arguments to the same entry point
//! the binary uses.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode, Output};

/// When set, the test executable behaves as `hipsynth`.
pub const CLI_ENV: &str = "HIPSYNTH_VALIDATION_AS_CLI";

/// Runs the command-line interface if this process was started by
/// [`run_in`]. Call first thing in `main`.
pub fn serve_cli_if_requested() -> Option<ExitCode> {
    std::env::var_os(CLI_ENV)?;
    let args = std::iter::once("hipsynth".into()).chain(std::env::args_os().skip(1));
    Some(hipsynth::main_with_args(args))
}

/// Runs `hipsynth args..` in `cwd` and returns its output.
pub fn run_in(cwd: &Path, args: &[&str]) -> Output {
    Command::new(std::env::current_exe().expect("test executable path"))
        .env(CLI_ENV, "1")
        .current_dir(cwd)
        .args(args)
        .output()
        .expect("cli runs")
}

#[track_caller]
pub fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Every file under `root` keyed by its relative path.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// The manifest without its `runtime` section.
pub fn manifest_sans_runtime(dir: &Path) -> serde_json::Value {
    let raw = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&raw).unwrap();
    v.as_object_mut().unwrap().remove("runtime");
    v
}

/// Snapshot of an output directory with the non-deterministic parts removed:
/// the manifest's runtime section and bench timing columns.
pub fn comparable(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = snapshot(dir);
    files.insert(
        PathBuf::from("manifest.json"),
        serde_json::to_vec(&manifest_sans_runtime(dir)).unwrap(),
    );
    if let Some(b) = files.get_mut(Path::new("bench.csv")) {
        let r = hipsynth::cmd::bench::read_bench(&b[..]).unwrap();
        *b = format!("{},{},{},{}", r.docs, r.words, r.entities, r.output_digest).into_bytes();
    }
    files
}
