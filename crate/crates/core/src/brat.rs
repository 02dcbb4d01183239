//! BRAT standoff annotations (`.ann`) and their companion text files.
//!
//! Offsets are Unicode scalar value offsets, as counted by BRAT itself.
//! Only text-bound (`T`) lines become [`AnnotationRecord`]s; every other line
//! (relations, events, attributes, notes, blank lines) is carried through
//! verbatim and re-emitted at its original position.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{EventKind, Warning};
use crate::text::CharIndex;

/// Half-open `[start, end)` character range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub id: String,
    pub category: String,
    spans: Vec<Span>,
    pub surface: Option<String>,
}

impl AnnotationRecord {
    /// Builds a record, rejecting empty, unsorted or overlapping fragments.
    pub fn new(
        id: impl Into<String>,
        category: impl Into<String>,
        spans: Vec<Span>,
        surface: Option<String>,
    ) -> Result<Self> {
        let id = id.into();
        validate_spans(&spans).map_err(|message| Error::InvalidRecord {
            id: id.clone(),
            message,
        })?;
        Ok(AnnotationRecord {
            id,
            category: category.into(),
            spans,
            surface,
        })
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn start(&self) -> usize {
        self.spans[0].start
    }

    pub fn end(&self) -> usize {
        self.spans[self.spans.len() - 1].end
    }

    /// Sum of fragment lengths.
    pub fn total_len(&self) -> usize {
        self.spans.iter().map(Span::len).sum()
    }

    pub(crate) fn set_single_span(&mut self, span: Span) {
        debug_assert!(!span.is_empty());
        self.spans = vec![span];
    }
}

fn validate_spans(spans: &[Span]) -> std::result::Result<(), String> {
    if spans.is_empty() {
        return Err("no spans".into());
    }
    for s in spans {
        if s.end <= s.start {
            return Err(format!("span {s} has end <= start"));
        }
    }
    for w in spans.windows(2) {
        if w[1].start < w[0].end {
            return Err(format!("fragments {} and {} are unsorted or overlap", w[0], w[1]));
        }
    }
    Ok(())
}

/// A non-text-bound line, kept verbatim. `after_records` is how many
/// text-bound records preceded it in the source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassthroughLine {
    pub after_records: usize,
    pub line: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnFile {
    pub records: Vec<AnnotationRecord>,
    pub passthrough: Vec<PassthroughLine>,
}

pub fn parse_ann_bytes(raw: &[u8]) -> Result<AnnFile> {
    let text = std::str::from_utf8(raw).map_err(|e| {
        let line = 1 + raw[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count();
        Error::Parse {
            line,
            message: "invalid UTF-8".into(),
        }
    })?;
    parse_ann(text)
}

pub fn parse_ann(raw: &str) -> Result<AnnFile> {
    let mut out = AnnFile::default();
    let mut seen = std::collections::HashSet::new();
    let body = raw.strip_suffix('\n').unwrap_or(raw);
    if body.is_empty() && raw.len() <= 1 {
        return Ok(out);
    }
    for (i, line) in body.split('\n').enumerate() {
        let line_no = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if !line.starts_with('T') {
            out.passthrough.push(PassthroughLine {
                after_records: out.records.len(),
                line: line.to_string(),
            });
            continue;
        }
        let rec = parse_text_bound(line).map_err(|message| Error::Parse {
            line: line_no,
            message,
        })?;
        if !seen.insert(rec.id.clone()) {
            return Err(Error::DuplicateId {
                line: line_no,
                id: rec.id,
            });
        }
        out.records.push(rec);
    }
    Ok(out)
}

fn parse_text_bound(line: &str) -> std::result::Result<AnnotationRecord, String> {
    let mut cols = line.splitn(3, '\t');
    let id = cols.next().unwrap_or_default();
    let body = cols
        .next()
        .ok_or_else(|| format!("text-bound annotation {id:?} is missing its tab separator"))?;
    let surface = cols.next().map(str::to_string);
    if id.is_empty() || id.contains(' ') {
        return Err(format!("malformed annotation id {id:?}"));
    }
    let (category, offsets) = body
        .split_once(' ')
        .ok_or_else(|| format!("{id}: expected \"LABEL start end\", found {body:?}"))?;
    if category.is_empty() {
        return Err(format!("{id}: empty category label"));
    }
    let mut spans = Vec::new();
    for frag in offsets.split(';') {
        let mut nums = frag.split(' ');
        let (Some(s), Some(e), None) = (nums.next(), nums.next(), nums.next()) else {
            return Err(format!("{id}: malformed offsets {frag:?}"));
        };
        let start = parse_offset(s).ok_or_else(|| format!("{id}: non-numeric offset {s:?}"))?;
        let end = parse_offset(e).ok_or_else(|| format!("{id}: non-numeric offset {e:?}"))?;
        spans.push(Span::new(start, end));
    }
    validate_spans(&spans).map_err(|m| format!("{id}: {m}"))?;
    Ok(AnnotationRecord {
        id: id.to_string(),
        category: category.to_string(),
        spans,
        surface,
    })
}

fn parse_offset(s: &str) -> Option<usize> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

fn write_record(out: &mut String, r: &AnnotationRecord) {
    use std::fmt::Write as _;
    let _ = write!(out, "{}\t{} ", r.id, r.category);
    for (i, s) in r.spans.iter().enumerate() {
        if i > 0 {
            out.push(';');
        }
        let _ = write!(out, "{s}");
    }
    if let Some(surface) = &r.surface {
        out.push('\t');
        out.push_str(surface);
    }
    out.push('\n');
}

/// Emits records and passthrough lines in their original interleaving.
/// Every line, including the last, ends with `\n`.
pub fn serialize_ann(records: &[AnnotationRecord], passthrough: &[PassthroughLine]) -> String {
    let mut out = String::new();
    let mut pt = passthrough.iter().peekable();
    for (i, r) in records.iter().enumerate() {
        while let Some(p) = pt.next_if(|p| p.after_records <= i) {
            out.push_str(&p.line);
            out.push('\n');
        }
        write_record(&mut out, r);
    }
    for p in pt {
        out.push_str(&p.line);
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentBundle {
    pub doc_id: String,
    pub patient_id: Option<String>,
    pub text: Option<String>,
    pub annotations: Vec<AnnotationRecord>,
    pub passthrough: Vec<PassthroughLine>,
}

impl DocumentBundle {
    /// Builds a bundle from an `.ann` body and optional text. When text is
    /// present every surface is re-derived from it; a stored surface that
    /// disagrees produces a warning and the text wins.
    pub fn from_parts(
        doc_id: impl Into<String>,
        ann: &str,
        text: Option<String>,
    ) -> Result<(Self, Vec<Warning>)> {
        let doc_id = doc_id.into();
        let parsed = parse_ann(ann)?;
        let mut warnings = Vec::new();
        let mut annotations = parsed.records;
        if let Some(text) = &text {
            let idx = CharIndex::new(text);
            let len = idx.len_chars();
            for rec in &mut annotations {
                if rec.end() > len {
                    return Err(Error::SpanOutOfBounds {
                        doc_id,
                        id: rec.id.clone(),
                        end: rec.end(),
                        len,
                    });
                }
                let derived = idx.extract(rec.spans()).expect("spans checked against text length");
                if let Some(stored) = &rec.surface {
                    if *stored != derived {
                        warnings.push(Warning::new(
                            &doc_id,
                            EventKind::SurfaceMismatch,
                            format!("{}: .ann has {stored:?}, text has {derived:?}", rec.id),
                        ));
                    }
                }
                rec.surface = Some(derived);
            }
        }
        Ok((
            DocumentBundle {
                doc_id,
                patient_id: None,
                text,
                annotations,
                passthrough: parsed.passthrough,
            },
            warnings,
        ))
    }

    pub fn ann_string(&self) -> String {
        serialize_ann(&self.annotations, &self.passthrough)
    }

    /// The patient grouping key; a document without a patient is its own patient.
    pub fn patient_key(&self) -> &str {
        self.patient_id.as_deref().unwrap_or(&self.doc_id)
    }
}

/// Loads `ann_path` and, if given, its text file. The document id is the
/// `.ann` file stem.
pub fn load_bundle(ann_path: &Path, txt_path: Option<&Path>) -> Result<(DocumentBundle, Vec<Warning>)> {
    let doc_id = ann_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    load_bundle_as(doc_id, ann_path, txt_path)
}

pub fn load_bundle_as(
    doc_id: String,
    ann_path: &Path,
    txt_path: Option<&Path>,
) -> Result<(DocumentBundle, Vec<Warning>)> {
    let raw = fs::read(ann_path).map_err(|e| Error::io(ann_path, e))?;
    let ann = std::str::from_utf8(&raw).map_err(|_| Error::Parse {
        line: 0,
        message: format!("{} is not valid UTF-8", ann_path.display()),
    })?;
    let text = match txt_path {
        Some(p) => Some(fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
        None => None,
    };
    DocumentBundle::from_parts(doc_id, ann, text)
}
