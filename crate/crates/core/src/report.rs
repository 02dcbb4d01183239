//! Machine-readable audit events raised while loading and rewriting documents.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SurfaceMismatch,
    OverlapDropped,
    UnknownCategory,
    DateFallback,
    AgeFallback,
    TimeFallback,
    DiscontinuousCollapsed,
    OriginalNotExcluded,
    SkippedDocument,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::SurfaceMismatch => "surface_mismatch",
            EventKind::OverlapDropped => "overlap_dropped",
            EventKind::UnknownCategory => "unknown_category",
            EventKind::DateFallback => "date_fallback",
            EventKind::AgeFallback => "age_fallback",
            EventKind::TimeFallback => "time_fallback",
            EventKind::DiscontinuousCollapsed => "discontinuous_collapsed",
            EventKind::OriginalNotExcluded => "original_not_excluded",
            EventKind::SkippedDocument => "skipped_document",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub doc_id: String,
    pub event: EventKind,
    pub detail: String,
}

impl Warning {
    pub fn new(doc_id: impl Into<String>, event: EventKind, detail: impl Into<String>) -> Self {
        Warning {
            doc_id: doc_id.into(),
            event,
            detail: detail.into(),
        }
    }
}

/// Writes the `doc_id,event,detail` report.
pub fn write_report<W: Write>(out: W, warnings: &[Warning]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["doc_id", "event", "detail"])?;
    for warn in warnings {
        w.write_record([warn.doc_id.as_str(), warn.event.as_str(), warn.detail.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a report written by [`write_report`].
pub fn read_report<R: Read>(reader: R, source_name: &str) -> Result<Vec<Warning>> {
    crate::table::read_rows(reader, source_name)
}
