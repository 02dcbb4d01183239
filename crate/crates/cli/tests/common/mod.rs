#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn hipsynth() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hipsynth"))
}

/// Runs the binary in `cwd` and returns its output.
pub fn run_in(cwd: &Path, args: &[&str]) -> Output {
    hipsynth()
        .current_dir(cwd)
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[track_caller]
pub fn ok(out: Output) -> Output {
    assert_eq!(
        code(&out),
        0,
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        stderr(&out)
    );
    out
}

/// Writes `<id>.txt` and `<id>.ann` with offsets located in `text`: each
/// mention is found after the end of the previous one.
pub fn write_doc(dir: &Path, id: &str, text: &str, mentions: &[(&str, &str)]) {
    let mut ann = String::new();
    let mut from = 0;
    for (i, (category, surface)) in mentions.iter().enumerate() {
        let at = from + text[from..].find(surface).unwrap_or_else(|| panic!("{surface:?} not in {id}"));
        let start = text[..at].chars().count();
        let end = start + surface.chars().count();
        ann.push_str(&format!("T{}\t{category} {start} {end}\t{surface}\n", i + 1));
        from = at + surface.len();
    }
    let base = dir.join(id);
    std::fs::create_dir_all(base.parent().unwrap()).unwrap();
    std::fs::write(dir.join(format!("{id}.txt")), text).unwrap();
    std::fs::write(dir.join(format!("{id}.ann")), ann).unwrap();
}

/// Two patients, three notes, including the six-mention name example.
pub fn small_corpus(dir: &Path) {
    write_doc(
        dir,
        "n1",
        "Sandy was seen today. Sandy reports pain. Sandy denies fever. Plan: Sandy to return. \
         Sandy agrees. Called Sandy on 03/04/2014 at 10:30am.\n",
        &[
            ("PATIENT", "Sandy"),
            ("PATIENT", "Sandy"),
            ("PATIENT", "Sandy"),
            ("PATIENT", "Sandy"),
            ("PATIENT", "Sandy"),
            ("PATIENT", "Sandy"),
            ("DATE", "03/04/2014"),
            ("TIME", "10:30am"),
        ],
    );
    write_doc(
        dir,
        "n2",
        "Dr. Lee saw John Smith (MRN 12345678), age 45, at UAB Hospital on May 5, 2015. Smith lives in Birmingham.\n",
        &[
            ("DOCTOR", "Lee"),
            ("PATIENT", "John Smith"),
            ("MEDICALRECORD", "12345678"),
            ("AGE", "45"),
            ("HOSPITAL", "UAB Hospital"),
            ("DATE", "May 5, 2015"),
            ("PATIENT", "Smith"),
            ("CITY", "Birmingham"),
        ],
    );
    write_doc(
        dir,
        "sub/n3",
        "Follow-up for John Smith: phone 205-555-0199, seen 05/20/2015.\n",
        &[("PATIENT", "John Smith"), ("PHONE", "205-555-0199"), ("DATE", "05/20/2015")],
    );
    std::fs::write(dir.join("patients.csv"), "doc_id,patient_id\nn1,p1\nn2,p2\nsub/n3,p2\n").unwrap();
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
