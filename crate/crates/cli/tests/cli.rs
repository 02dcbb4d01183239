mod common;

use std::fs::File;
use std::path::{Path, PathBuf};

use common::{code, comparable, manifest_sans_runtime, ok, run_in, small_corpus, snapshot, stderr, write_doc};
use hipsynth::cmd::analytic::read_estimates;
use hipsynth::cmd::bench::read_bench;
use hipsynth::cmd::simulate::read_runs;
use hipsynth::manifest::RunManifest;
use hipsynth_core::analytic::read_sweep;
use hipsynth_core::brat::load_bundle;
use hipsynth_core::leakage::{read_summaries, RepeatHistograms};
use hipsynth_core::report::{read_report, EventKind};
use hipsynth_core::stats::{read_doc_counts, read_stats};
use tempfile::TempDir;

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest(dir: &Path) -> RunManifest {
    RunManifest::read(&dir.join("manifest.json")).unwrap()
}

fn corpus() -> (TempDir, PathBuf) {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("in");
    small_corpus(&input);
    (tmp, input)
}

#[test]
fn empty_corpus_succeeds_with_zero_counts() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("empty");
    std::fs::create_dir(&input).unwrap();
    let out = tmp.path().join("out");
    ok(run_in(tmp.path(), &["--seed", "1", "resynth", "--in", s(&input), "--out", s(&out)]));
    let m = manifest(&out);
    assert_eq!(m.counts["documents_written"], 0);
    assert_eq!(m.counts["annotations_replaced"], 0);
    let report = read_report(File::open(out.join("report.csv")).unwrap(), "report").unwrap();
    assert!(report.is_empty());
}

#[test]
fn malformed_document_is_an_input_error_naming_the_file() {
    let (tmp, input) = corpus();
    std::fs::write(input.join("bad.ann"), "T1\tPATIENT 5 2\tx\n").unwrap();
    let out = run_in(tmp.path(), &["--seed", "1", "resynth", "--in", s(&input), "--out", "out"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("bad.ann"), "{}", stderr(&out));
}

#[test]
fn skip_bad_docs_reports_and_continues() {
    let (tmp, input) = corpus();
    std::fs::write(input.join("bad.ann"), "T1\tPATIENT 0 500\tx\n").unwrap();
    std::fs::write(input.join("bad.txt"), "short").unwrap();
    let out = tmp.path().join("out");
    ok(run_in(
        tmp.path(),
        &["--seed", "1", "resynth", "--in", s(&input), "--out", s(&out), "--skip-bad-docs"],
    ));
    let m = manifest(&out);
    assert_eq!(m.counts["documents_skipped"], 1);
    assert_eq!(m.counts["documents_written"], 3);
    assert_eq!(m.warnings["skipped_document"], 1);
    let report = read_report(File::open(out.join("report.csv")).unwrap(), "report").unwrap();
    assert!(report.iter().any(|w| w.doc_id == "bad" && w.event == EventKind::SkippedDocument));
    assert!(!out.join("bad.ann").exists());
}

#[test]
fn usage_errors_exit_1() {
    let tmp = TempDir::new().unwrap();
    let cases: &[&[&str]] = &[
        &["simulate", "--synth", "mimic", "--fner", "", "--out", "o"],
        &["simulate", "--synth", "mimic", "--fner", "1.5", "--out", "o"],
        &["simulate", "--synth", "mimic"],
        &["simulate", "--out", "o"],
        &["simulate", "--synth", "mimic", "--dist", "x.csv", "--out", "o"],
        &["simulate", "--synth", "atlantis", "--out", "o"],
        &["resynth", "--in", "x"],
        &["resynth", "--strategy", "sometimes", "--in", "x", "--out", "o"],
        &["analytic", "--preset", "fig9", "--out", "o"],
        &["analytic", "--threshold", "nobody", "--out", "o"],
        &["bench", "--docs", "0", "--out", "o"],
        &["frobnicate"],
    ];
    for args in cases {
        let out = run_in(tmp.path(), args);
        assert_eq!(code(&out), 1, "{args:?}: {}", stderr(&out));
    }
    assert_eq!(code(&run_in(tmp.path(), &["--help"])), 0);
    assert_eq!(code(&run_in(tmp.path(), &["--version"])), 0);
}

#[test]
fn input_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let missing = run_in(tmp.path(), &["resynth", "--in", "nowhere", "--out", "o"]);
    assert_eq!(code(&missing), 2, "{}", stderr(&missing));
    std::fs::write(tmp.path().join("d.csv"), "doc_id,patient_id,category,critical,mention_count\nd,p,X,maybe,3\n").unwrap();
    let bad = run_in(tmp.path(), &["simulate", "--dist", "d.csv", "--out", "o"]);
    assert_eq!(code(&bad), 2, "{}", stderr(&bad));
    assert!(stderr(&bad).contains("d.csv"), "{}", stderr(&bad));
    std::fs::create_dir(tmp.path().join("empty")).unwrap();
    let empty = run_in(tmp.path(), &["stats", "--in", "empty", "--out", "o"]);
    assert_eq!(code(&empty), 2, "{}", stderr(&empty));
}

#[test]
fn resynth_refuses_to_overwrite_its_input() {
    let (tmp, input) = corpus();
    let out = run_in(tmp.path(), &["resynth", "--in", s(&input), "--out", s(&input)]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
}

#[test]
fn bad_config_file_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    std::fs::write(tmp.path().join("c.toml"), "[resynth]\ncolour = \"blue\"\n").unwrap();
    let out = run_in(tmp.path(), &["--config", "c.toml", "resynth", "--in", "x", "--out", "o"]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert!(stderr(&out).contains("colour"), "{}", stderr(&out));
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let (tmp, input) = corpus();
    let toml = format!(
        "seed = 11\n\n[resynth]\nin = {:?}\nout = \"from-config\"\nstrategy = \"consistent\"\npool_size = 50\n",
        s(&input)
    );
    std::fs::write(tmp.path().join("run.toml"), toml).unwrap();
    ok(run_in(
        tmp.path(),
        &["--config", "run.toml", "resynth", "--strategy", "random", "--out", "from-flag"],
    ));
    assert!(!tmp.path().join("from-config").exists());
    let m = manifest(&tmp.path().join("from-flag"));
    assert_eq!(m.seed, 11);
    assert_eq!(m.seed_source, "config");
    assert_eq!(m.config["strategy"], "random");
    assert_eq!(m.config["pool_size"], 50);
    assert_eq!(m.config["offset_scope"], "patient");
    assert_eq!(m.config["date_order"], "month-first");
    assert_eq!(m.config["p_new"], 1.0);
}

#[test]
fn manifest_reruns_reproduce_outputs() {
    let (tmp, input) = corpus();
    let first = tmp.path().join("first");
    ok(run_in(
        tmp.path(),
        &["resynth", "--in", s(&input), "--out", s(&first), "--patients", s(&input.join("patients.csv"))],
    ));
    let m = manifest(&first);
    assert_eq!(m.seed_source, "entropy");

    let again = tmp.path().join("again");
    let manifest_path = first.join("manifest.json");
    ok(run_in(tmp.path(), &["--config", s(&manifest_path), "resynth", "--out", s(&again)]));
    let mut a = snapshot(&first);
    let mut b = snapshot(&again);
    a.remove(Path::new("manifest.json"));
    b.remove(Path::new("manifest.json"));
    assert_eq!(a, b);
    assert_eq!(manifest(&again).seed, m.seed);
    assert_eq!(manifest(&again).seed_source, "config");

    // the explicit seed gives the same files too
    let seeded = tmp.path().join("seeded");
    ok(run_in(
        tmp.path(),
        &["--seed", &m.seed.to_string(), "resynth", "--in", s(&input), "--out", s(&seeded), "--patients",
          s(&input.join("patients.csv"))],
    ));
    let mut c = snapshot(&seeded);
    c.remove(Path::new("manifest.json"));
    assert_eq!(a, c);
}

#[test]
fn same_relative_invocation_gives_identical_manifests() {
    let (tmp, input) = corpus();
    let mut views = Vec::new();
    for (i, jobs) in ["1", "3"].iter().enumerate() {
        let cwd = tmp.path().join(format!("run{i}"));
        std::fs::create_dir(&cwd).unwrap();
        ok(run_in(&cwd, &["--seed", "5", "--jobs", jobs, "resynth", "--in", s(&input), "--out", "out"]));
        views.push((manifest_sans_runtime(&cwd.join("out")), comparable(&cwd.join("out"))));
    }
    assert_eq!(views[0], views[1]);
}

#[test]
fn markov_resynthesis_of_the_small_corpus() {
    let (tmp, input) = corpus();
    let out = tmp.path().join("out");
    ok(run_in(
        tmp.path(),
        &["--seed", "3", "resynth", "--in", s(&input), "--out", s(&out), "--strategy", "markov", "--patients",
          s(&input.join("patients.csv"))],
    ));
    let m = manifest(&out);
    assert_eq!(m.counts["documents_written"], 3);
    assert_eq!(m.counts["annotations_replaced"], 19);
    assert!(m.warnings.is_empty(), "{:?}", m.warnings);

    for id in ["n1", "n2", "sub/n3"] {
        let (before, _) = load_bundle(&input.join(format!("{id}.ann")), Some(&input.join(format!("{id}.txt")))).unwrap();
        let (after, warnings) = load_bundle(&out.join(format!("{id}.ann")), Some(&out.join(format!("{id}.txt")))).unwrap();
        assert!(warnings.is_empty(), "{id}: {warnings:?}");
        assert_eq!(before.annotations.len(), after.annotations.len());
        for (b, a) in before.annotations.iter().zip(&after.annotations) {
            assert_eq!((b.id.as_str(), b.category.as_str()), (a.id.as_str(), a.category.as_str()));
            assert_ne!(b.surface, a.surface, "{id} {}", b.id);
        }
    }
    let text = std::fs::read_to_string(out.join("n1.txt")).unwrap();
    assert!(!text.contains("Sandy"));
    assert!(text.contains(" was seen today. "));
    assert!(std::fs::read_to_string(out.join("sub/n3.txt")).unwrap().starts_with("Follow-up for "));
}

#[test]
fn nested_and_dotted_ids_keep_their_paths() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("in");
    write_doc(&input, "a/b/note.v2", "Seen by Dr. Lee.\n", &[("DOCTOR", "Lee")]);
    let out = tmp.path().join("out");
    ok(run_in(tmp.path(), &["--seed", "1", "resynth", "--in", s(&input), "--out", s(&out)]));
    assert!(out.join("a/b/note.v2.ann").exists());
    assert!(out.join("a/b/note.v2.txt").exists());
}

#[test]
fn every_csv_output_reads_back() {
    let (tmp, input) = corpus();
    let t = tmp.path();

    ok(run_in(t, &["--seed", "2", "resynth", "--in", s(&input), "--out", "r"]));
    read_report(File::open(t.join("r/report.csv")).unwrap(), "report").unwrap();

    ok(run_in(
        t,
        &["--seed", "2", "simulate", "--synth", "mimic", "--synth-docs", "300", "--runs", "20", "--histograms",
          "--fner", "0.01,0.05", "--out", "sim"],
    ));
    let leak = read_summaries(File::open(t.join("sim/leakage.csv")).unwrap(), "leakage").unwrap();
    assert_eq!(leak.len(), 6);
    let runs = read_runs(File::open(t.join("sim/runs.csv")).unwrap(), "runs").unwrap();
    assert_eq!(runs.len(), 6 * 20);
    let h = RepeatHistograms::read_csv(File::open(t.join("sim/histogram_markov_0p01.csv")).unwrap(), "h").unwrap();
    assert_eq!(h.max_repeat.values().sum::<u64>(), 300 * 20);

    // the exported distribution feeds straight back in
    ok(run_in(
        t,
        &["--seed", "2", "simulate", "--dist", "sim/distribution.csv", "--runs", "20", "--fner", "0.01,0.05",
          "--out", "sim2"],
    ));
    assert_eq!(
        std::fs::read(t.join("sim/leakage.csv")).unwrap(),
        std::fs::read(t.join("sim2/leakage.csv")).unwrap()
    );

    ok(run_in(t, &["--seed", "2", "analytic", "--high-rate", "--docs", "10,100", "--estimate", "--trials", "2000",
                   "--out", "an"]));
    let sweep = read_sweep(File::open(t.join("an/analytic.csv")).unwrap(), "analytic").unwrap();
    assert_eq!(sweep.len(), 3 * 3 * 2);
    let est = read_estimates(File::open(t.join("an/thresholds.csv")).unwrap(), "thresholds").unwrap();
    assert_eq!(est.len(), 3);

    ok(run_in(t, &["stats", "--in", s(&input), "--patients", s(&input.join("patients.csv")), "--out", "st"]));
    let stats = read_stats(File::open(t.join("st/stats.csv")).unwrap(), "stats").unwrap();
    let docs = read_doc_counts(File::open(t.join("st/doc_counts.csv")).unwrap(), "docs").unwrap();
    assert_eq!(docs.len(), 3);
    assert_eq!(stats.len(), 2);
    ok(run_in(t, &["stats", "--dist", "st/distribution.csv", "--out", "st2"]));
    assert_eq!(std::fs::read(t.join("st/stats.csv")).unwrap(), std::fs::read(t.join("st2/stats.csv")).unwrap());

    ok(run_in(t, &["--seed", "2", "bench", "--docs", "12", "--words-per-doc", "200", "--entities-per-doc", "10",
                   "--out", "b"]));
    let b = read_bench(File::open(t.join("b/bench.csv")).unwrap()).unwrap();
    assert_eq!((b.docs, b.entities), (12, 120));
}

#[test]
fn small_corpus_statistics() {
    let (tmp, input) = corpus();
    ok(run_in(tmp.path(), &["stats", "--in", s(&input), "--patients", s(&input.join("patients.csv")), "--out", "st"]));
    let docs = read_doc_counts(File::open(tmp.path().join("st/doc_counts.csv")).unwrap(), "docs").unwrap();
    let by_id: Vec<(String, String, u64)> = docs.into_iter().map(|d| (d.doc_id, d.patient_id, d.critical)).collect();
    // critical: names, record numbers and phone numbers; dates, ages and places are not
    assert_eq!(
        by_id,
        vec![
            ("n1".to_string(), "p1".to_string(), 6),
            ("n2".to_string(), "p2".to_string(), 3),
            ("sub/n3".to_string(), "p2".to_string(), 2),
        ]
    );
}

#[test]
fn analytic_custom_thresholds() {
    let tmp = TempDir::new().unwrap();
    ok(run_in(
        tmp.path(),
        &["analytic", "--docs", "10", "--epd", "15", "--fner", "0.01", "--threshold", "markov", "--threshold",
          "mine=3.5", "--out", "o"],
    ));
    let rows = read_sweep(File::open(tmp.path().join("o/analytic.csv")).unwrap(), "a").unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r.strategy.as_str()).collect();
    assert_eq!(names, ["markov", "mine"]);
    assert!(rows[1].leak_probability < rows[0].leak_probability);
}
