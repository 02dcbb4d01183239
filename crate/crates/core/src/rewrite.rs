//! Splicing surrogates into text and remapping annotation offsets.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::brat::{AnnotationRecord, DocumentBundle, Span};
use crate::error::{Error, Result};
use crate::report::{EventKind, Warning};
use crate::strategy::ReplacementPlan;
use crate::text::{char_len, CharIndex};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpliceOp {
    pub original_span: Span,
    pub replacement: String,
}

/// Orders ids like `T2` before `T10`.
fn natural_key(id: &str) -> (String, u64, String) {
    let digits_at = id.find(|c: char| c.is_ascii_digit()).unwrap_or(id.len());
    let (prefix, rest) = id.split_at(digits_at);
    let num_len = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
    let num = rest[..num_len].parse().unwrap_or(u64::MAX);
    (prefix.to_string(), num, rest[num_len..].to_string())
}

/// Drops records that overlap a higher-priority record. Priority goes to the
/// longer total span, then to the earlier id. Survivors keep their input
/// order; each dropped record yields a warning.
pub fn resolve_overlaps(doc_id: &str, records: Vec<AnnotationRecord>) -> (Vec<AnnotationRecord>, Vec<Warning>) {
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&records[a], &records[b]);
        rb.total_len()
            .cmp(&ra.total_len())
            .then_with(|| natural_key(&ra.id).cmp(&natural_key(&rb.id)))
            .then(a.cmp(&b))
    });

    // accepted fragments: start -> (end, owning record index)
    let mut taken: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut keep = vec![false; records.len()];
    let mut warnings = Vec::new();
    for i in order {
        let conflict = records[i].spans().iter().find_map(|s| {
            taken
                .range(..s.end)
                .next_back()
                .and_then(|(_, &(end, owner))| (end > s.start).then_some(owner))
        });
        match conflict {
            Some(owner) => warnings.push(Warning::new(
                doc_id,
                EventKind::OverlapDropped,
                format!(
                    "{} {} dropped in favor of {} {}",
                    records[i].id, records[i].category, records[owner].id, records[owner].category
                ),
            )),
            None => {
                keep[i] = true;
                for s in records[i].spans() {
                    taken.insert(s.start, (s.end, i));
                }
            }
        }
    }
    let kept = records.into_iter().zip(keep).filter_map(|(r, k)| k.then_some(r)).collect();
    (kept, warnings)
}

/// Splice operations for a plan: each planned record's first fragment is
/// replaced by its surrogate and any further fragments are deleted.
pub fn splice_ops(bundle: &DocumentBundle, plan: &ReplacementPlan) -> Result<Vec<SpliceOp>> {
    let mismatch = |message: String| Error::PlanMismatch {
        doc_id: bundle.doc_id.clone(),
        message,
    };
    if plan.doc_id != bundle.doc_id {
        return Err(mismatch(format!("plan is for {}", plan.doc_id)));
    }
    let mut ops = Vec::new();
    for a in &plan.assignments {
        let rec = bundle
            .annotations
            .get(a.mention)
            .filter(|r| r.id == a.id)
            .ok_or_else(|| mismatch(format!("mention {} ({}) is not in the document", a.mention, a.id)))?;
        if a.surrogate.is_empty() {
            return Err(mismatch(format!("empty surrogate for {}", a.id)));
        }
        for (j, s) in rec.spans().iter().enumerate() {
            ops.push(SpliceOp {
                original_span: *s,
                replacement: if j == 0 { a.surrogate.clone() } else { String::new() },
            });
        }
    }
    ops.sort_by_key(|o| o.original_span.start);
    if let Some(w) = ops.windows(2).find(|w| w[1].original_span.start < w[0].original_span.end) {
        return Err(mismatch(format!(
            "replacement spans {} and {} overlap",
            w[0].original_span, w[1].original_span
        )));
    }
    Ok(ops)
}

/// Maps pre-splice character offsets to post-splice offsets for positions
/// outside every replaced span.
struct OffsetMap {
    ends: Vec<usize>,
    // cumulative delta after the first i ops
    cum: Vec<i64>,
}

impl OffsetMap {
    fn new(ops: &[SpliceOp]) -> Self {
        let mut cum = Vec::with_capacity(ops.len() + 1);
        cum.push(0i64);
        for o in ops {
            let d = char_len(&o.replacement) as i64 - o.original_span.len() as i64;
            cum.push(cum.last().unwrap() + d);
        }
        OffsetMap {
            ends: ops.iter().map(|o| o.original_span.end).collect(),
            cum,
        }
    }

    fn map(&self, p: usize) -> usize {
        let n = self.ends.partition_point(|&e| e <= p);
        (p as i64 + self.cum[n]) as usize
    }
}

/// Applies `plan` to `bundle`. Unannotated text is copied unchanged and
/// every offset is shifted by the cumulative length change before it.
/// Without text only the annotations are rewritten, with spans sized to
/// their surrogates.
pub fn apply_plan(bundle: &DocumentBundle, plan: &ReplacementPlan) -> Result<(DocumentBundle, Vec<Warning>)> {
    let ops = splice_ops(bundle, plan)?;
    let map = OffsetMap::new(&ops);
    let mut warnings = Vec::new();

    let text = match &bundle.text {
        Some(text) => {
            let idx = CharIndex::new(text);
            let mut out = String::with_capacity(text.len() + text.len() / 8);
            let mut cursor = 0usize;
            for op in &ops {
                let (s, e) = byte_range(&idx, op.original_span, &bundle.doc_id)?;
                out.push_str(&text[cursor..s]);
                out.push_str(&op.replacement);
                cursor = e;
            }
            out.push_str(&text[cursor..]);
            Some(out)
        }
        None => None,
    };

    let by_mention: BTreeMap<usize, &str> =
        plan.assignments.iter().map(|a| (a.mention, a.surrogate.as_str())).collect();
    let mut annotations = Vec::with_capacity(bundle.annotations.len());
    for (i, rec) in bundle.annotations.iter().enumerate() {
        let mut out = rec.clone();
        match by_mention.get(&i) {
            Some(&surrogate) => {
                if rec.spans().len() > 1 {
                    warnings.push(Warning::new(
                        &bundle.doc_id,
                        EventKind::DiscontinuousCollapsed,
                        format!("{}: {} fragments collapsed to one", rec.id, rec.spans().len()),
                    ));
                }
                let start = map.map(rec.start());
                out.set_single_span(Span::new(start, start + char_len(surrogate)));
                out.surface = Some(surrogate.to_string());
            }
            None => {
                let spans = rec
                    .spans()
                    .iter()
                    .map(|s| Span::new(map.map(s.start), map.map(s.end)))
                    .collect();
                out = AnnotationRecord::new(rec.id.clone(), rec.category.clone(), spans, rec.surface.clone())?;
            }
        }
        annotations.push(out);
    }

    Ok((
        DocumentBundle {
            doc_id: bundle.doc_id.clone(),
            patient_id: bundle.patient_id.clone(),
            text,
            annotations,
            passthrough: bundle.passthrough.clone(),
        },
        warnings,
    ))
}

fn byte_range(idx: &CharIndex<'_>, span: Span, doc_id: &str) -> Result<(usize, usize)> {
    match (idx.byte_offset(span.start), idx.byte_offset(span.end)) {
        (Some(s), Some(e)) => Ok((s, e)),
        _ => Err(Error::SpanOutOfBounds {
            doc_id: doc_id.to_string(),
            id: span.to_string(),
            end: span.end,
            len: idx.len_chars(),
        }),
    }
}

/// Output paths for a document id under `out_dir`; ids may contain `/` to
/// mirror an input tree.
pub fn output_paths(out_dir: &Path, doc_id: &str) -> (PathBuf, PathBuf) {
    let base = out_dir.join(doc_id).into_os_string();
    let with = |ext: &str| {
        let mut p = base.clone();
        p.push(ext);
        PathBuf::from(p)
    };
    (with(".ann"), with(".txt"))
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let parent = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| Error::io(parent, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Writes `<doc_id>.ann` and, when the bundle has text, `<doc_id>.txt`.
/// Each file is written to a temporary sibling and renamed into place.
pub fn write_bundle(bundle: &DocumentBundle, out_dir: &Path) -> Result<(PathBuf, Option<PathBuf>)> {
    let (ann, txt) = output_paths(out_dir, &bundle.doc_id);
    let txt = match &bundle.text {
        Some(t) => {
            write_atomic(&txt, t.as_bytes())?;
            Some(txt)
        }
        None => None,
    };
    write_atomic(&ann, bundle.ann_string().as_bytes())?;
    Ok((ann, txt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brat::load_bundle_as;
    use crate::strategy::{Assignment, ChainKey};

    fn rec(id: &str, cat: &str, spans: &[(usize, usize)], surface: Option<&str>) -> AnnotationRecord {
        AnnotationRecord::new(
            id,
            cat,
            spans.iter().map(|&(s, e)| Span::new(s, e)).collect(),
            surface.map(str::to_string),
        )
        .unwrap()
    }

    fn plan_for(doc: &DocumentBundle, subs: &[(usize, &str)]) -> ReplacementPlan {
        ReplacementPlan {
            doc_id: doc.doc_id.clone(),
            assignments: subs
                .iter()
                .map(|&(m, s)| Assignment {
                    mention: m,
                    id: doc.annotations[m].id.clone(),
                    key: ChainKey::new(&doc.doc_id, &doc.annotations[m].category, None),
                    surrogate: s.to_string(),
                })
                .collect(),
            ..Default::default()
        }
    }

    fn doc(text: Option<&str>, anns: Vec<AnnotationRecord>) -> DocumentBundle {
        DocumentBundle {
            doc_id: "d".into(),
            patient_id: None,
            text: text.map(str::to_string),
            annotations: anns,
            passthrough: vec![],
        }
    }

    #[test]
    fn overlap_resolution() {
        let plain = vec![rec("T1", "A", &[(0, 3)], None), rec("T2", "B", &[(3, 5)], None)];
        let (kept, w) = resolve_overlaps("d", plain.clone());
        assert_eq!(kept, plain);
        assert!(w.is_empty());

        let nested = vec![rec("T1", "PATIENT", &[(0, 10)], None), rec("T2", "DATE", &[(3, 8)], None)];
        let (kept, w) = resolve_overlaps("d", nested);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].category, "PATIENT");
        assert_eq!(w[0].event, EventKind::OverlapDropped);

        let tie = vec![rec("T2", "A", &[(0, 4)], None), rec("T1", "B", &[(0, 4)], None)];
        assert_eq!(resolve_overlaps("d", tie).0[0].id, "T1");
        let natural = vec![rec("T10", "A", &[(0, 4)], None), rec("T9", "B", &[(2, 6)], None)];
        assert_eq!(resolve_overlaps("d", natural).0[0].id, "T9");

        // a discontinuous record straddling a short one
        let gap = vec![rec("T1", "A", &[(0, 2), (6, 9)], None), rec("T2", "B", &[(3, 5)], None)];
        assert_eq!(resolve_overlaps("d", gap).0.len(), 2);
    }

    #[test]
    fn single_splice_shifts_following_text() {
        let b = doc(Some("Sandy saw Dr. X"), vec![rec("T1", "PATIENT", &[(0, 5)], Some("Sandy"))]);
        let (out, _) = apply_plan(&b, &plan_for(&b, &[(0, "Sara")])).unwrap();
        assert_eq!(out.text.as_deref(), Some("Sara saw Dr. X"));
        assert_eq!(out.annotations[0].spans(), &[Span::new(0, 4)]);
    }

    #[test]
    fn empty_plan_is_identity() {
        let b = doc(Some("abc def"), vec![rec("T1", "X", &[(4, 7)], Some("def"))]);
        let (out, w) = apply_plan(&b, &plan_for(&b, &[])).unwrap();
        assert_eq!(out, b);
        assert!(w.is_empty());
    }

    #[test]
    fn cumulative_delta_found_by_search() {
        let text = "aa BOB bb CAROL cc";
        let b = doc(
            Some(text),
            vec![rec("T1", "P", &[(3, 6)], Some("BOB")), rec("T2", "P", &[(10, 15)], Some("CAROL"))],
        );
        let (out, _) = apply_plan(&b, &plan_for(&b, &[(0, "@@1@@@"), (1, "#2#")])).unwrap();
        let t = out.text.unwrap();
        for (a, sentinel) in out.annotations.iter().zip(["@@1@@@", "#2#"]) {
            let at = t.find(sentinel).unwrap();
            assert_eq!(a.spans(), &[Span::new(at, at + sentinel.len())]);
        }
        assert_eq!(t, "aa @@1@@@ bb #2# cc");
    }

    #[test]
    fn unplanned_records_shift_too() {
        let b = doc(
            Some("Ann x Bea"),
            vec![rec("T1", "P", &[(0, 3)], Some("Ann")), rec("T2", "Q", &[(6, 9)], Some("Bea"))],
        );
        let (out, _) = apply_plan(&b, &plan_for(&b, &[(0, "Annabelle")])).unwrap();
        assert_eq!(out.annotations[1].spans(), &[Span::new(12, 15)]);
        assert_eq!(out.text.as_deref(), Some("Annabelle x Bea"));
    }

    #[test]
    fn multibyte_offsets() {
        let text = "Zoë met José.";
        let b = doc(Some(text), vec![rec("T1", "P", &[(0, 3)], Some("Zoë")), rec("T2", "P", &[(8, 12)], Some("José"))]);
        let (out, _) = apply_plan(&b, &plan_for(&b, &[(0, "Łukasz"), (1, "Ana")])).unwrap();
        let t = out.text.unwrap();
        assert_eq!(t, "Łukasz met Ana.");
        let idx = CharIndex::new(&t);
        assert_eq!(idx.slice(out.annotations[1].spans()[0]), Some("Ana"));
    }

    #[test]
    fn discontinuous_collapses() {
        let text = "0123456789 2014 56789 2021 x";
        let b = doc(Some(text), vec![rec("T2", "DATE", &[(11, 15), (22, 26)], Some("2014 2021"))]);
        let (out, w) = apply_plan(&b, &plan_for(&b, &[(0, "2015")])).unwrap();
        assert_eq!(out.text.as_deref(), Some("0123456789 2015 56789  x"));
        assert_eq!(out.annotations[0].spans(), &[Span::new(11, 15)]);
        assert_eq!(w[0].event, EventKind::DiscontinuousCollapsed);
    }

    #[test]
    fn text_absent_rewrites_annotations_only() {
        let b = doc(None, vec![rec("T1", "P", &[(0, 5)], Some("Sandy")), rec("T2", "P", &[(10, 15)], Some("Sandy"))]);
        let (out, _) = apply_plan(&b, &plan_for(&b, &[(0, "Al"), (1, "Bo")])).unwrap();
        assert!(out.text.is_none());
        assert_eq!(out.annotations[1].spans(), &[Span::new(7, 9)]);
        assert_eq!(out.annotations[1].surface.as_deref(), Some("Bo"));
    }

    #[test]
    fn plan_errors() {
        let b = doc(Some("abc"), vec![rec("T1", "P", &[(0, 3)], Some("abc"))]);
        let mut p = plan_for(&b, &[(0, "x")]);
        p.assignments[0].mention = 4;
        assert!(matches!(apply_plan(&b, &p), Err(Error::PlanMismatch { .. })));
        let mut p = plan_for(&b, &[(0, "x")]);
        p.doc_id = "other".into();
        assert!(apply_plan(&b, &p).is_err());
        assert!(apply_plan(&b, &plan_for(&b, &[(0, "")])).is_err());
    }

    #[test]
    fn write_and_reload_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = doc(Some("Sara saw Dr. X\n"), vec![rec("T1", "PATIENT", &[(0, 4)], Some("Sara"))]);
        b.doc_id = "sub/dir/note1".into();
        let (ann, txt) = write_bundle(&b, dir.path()).unwrap();
        let (back, w) = load_bundle_as(b.doc_id.clone(), &ann, txt.as_deref()).unwrap();
        assert!(w.is_empty());
        assert_eq!(back, b);

        let mut bare = b.clone();
        bare.text = None;
        bare.doc_id = "bare".into();
        let (_, txt) = write_bundle(&bare, dir.path()).unwrap();
        assert!(txt.is_none());
        assert!(!dir.path().join("bare.txt").exists());
    }

    #[test]
    fn unwritable_directory_errors() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("f");
        std::fs::write(&file, "x").unwrap();
        let b = doc(Some("a"), vec![]);
        assert!(write_bundle(&b, &file).is_err());
    }

    #[test]
    fn dotted_ids_keep_their_stem() {
        let (ann, txt) = output_paths(Path::new("out"), "a/note.v2");
        assert_eq!(ann, Path::new("out/a/note.v2.ann"));
        assert_eq!(txt, Path::new("out/a/note.v2.txt"));
    }
}
