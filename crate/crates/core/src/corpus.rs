//! Corpus discovery and patient manifests.

use std::collections::HashMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use walkdir::WalkDir;

use crate::brat::{load_bundle_as, DocumentBundle};
use crate::error::{Error, Result};
use crate::report::Warning;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    /// Path of the `.ann` file relative to the corpus root, without extension,
    /// using `/` separators.
    pub doc_id: String,
    pub ann_path: PathBuf,
    pub txt_path: Option<PathBuf>,
}

/// Every `.ann` file under `root`, sorted by document id. A sibling `.txt`
/// with the same stem is attached when present.
pub fn discover(root: &Path) -> Result<Vec<CorpusEntry>> {
    let mut out = Vec::new();
    for entry in WalkDir::new(root).follow_links(true) {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into_io_error().unwrap_or_else(|| std::io::Error::other("directory loop")))
        })?;
        let path = entry.path();
        if !entry.file_type().is_file() || path.extension().is_none_or(|x| x != "ann") {
            continue;
        }
        let rel = path.strip_prefix(root).unwrap_or(path).with_extension("");
        let doc_id = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        let txt = path.with_extension("txt");
        out.push(CorpusEntry {
            doc_id,
            ann_path: path.to_path_buf(),
            txt_path: txt.is_file().then_some(txt),
        });
    }
    out.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    doc_id: String,
    patient_id: String,
}

/// Reads a `doc_id,patient_id` CSV. Row numbers in errors count the header
/// as row 1.
pub fn read_patient_manifest<R: Read>(reader: R, source_name: &str) -> Result<HashMap<String, String>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut map = HashMap::new();
    for (i, row) in rdr.deserialize::<ManifestRow>().enumerate() {
        let row_no = i + 2;
        let row = row.map_err(|e| Error::Csv {
            source_name: source_name.to_string(),
            row: row_no,
            message: e.to_string(),
        })?;
        if map.insert(row.doc_id.clone(), row.patient_id).is_some() {
            return Err(Error::Csv {
                source_name: source_name.to_string(),
                row: row_no,
                message: format!("document {} listed twice", row.doc_id),
            });
        }
    }
    Ok(map)
}

pub fn load_patient_manifest(path: &Path) -> Result<HashMap<String, String>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_patient_manifest(f, &path.display().to_string())
}

/// Loads one entry, attaching its patient id from the manifest if listed.
pub fn load_entry(
    entry: &CorpusEntry,
    manifest: Option<&HashMap<String, String>>,
) -> Result<(DocumentBundle, Vec<Warning>)> {
    let (mut bundle, warnings) = load_bundle_as(entry.doc_id.clone(), &entry.ann_path, entry.txt_path.as_deref())?;
    bundle.patient_id = manifest.and_then(|m| m.get(&entry.doc_id).cloned());
    Ok((bundle, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discovers_nested_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        std::fs::create_dir_all(root.join("a/b")).unwrap();
        std::fs::write(root.join("z.ann"), "").unwrap();
        std::fs::write(root.join("a/b/n1.ann"), "T1\tPATIENT 0 3\tAnn\n").unwrap();
        std::fs::write(root.join("a/b/n1.txt"), "Ann").unwrap();
        std::fs::write(root.join("a/readme.md"), "x").unwrap();
        let found = discover(root).unwrap();
        let ids: Vec<_> = found.iter().map(|e| e.doc_id.as_str()).collect();
        assert_eq!(ids, ["a/b/n1", "z"]);
        assert!(found[0].txt_path.is_some());
        assert!(found[1].txt_path.is_none());

        let manifest = read_patient_manifest("doc_id,patient_id\na/b/n1,p7\n".as_bytes(), "m").unwrap();
        let (b, _) = load_entry(&found[0], Some(&manifest)).unwrap();
        assert_eq!(b.patient_key(), "p7");
        let (b, _) = load_entry(&found[1], Some(&manifest)).unwrap();
        assert_eq!(b.patient_key(), "z");
    }

    #[test]
    fn manifest_errors_name_rows() {
        let err = read_patient_manifest("doc_id,patient_id\nd1,p1\nd1,p2\n".as_bytes(), "m.csv").unwrap_err();
        assert!(matches!(err, Error::Csv { row: 3, .. }), "{err}");
        let err = read_patient_manifest("doc_id,patient_id\nd1\n".as_bytes(), "m.csv").unwrap_err();
        assert!(matches!(err, Error::Csv { row: 2, .. }), "{err}");
    }

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        assert!(discover(dir.path()).unwrap().is_empty());
    }
}
