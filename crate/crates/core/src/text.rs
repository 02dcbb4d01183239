//! Character-offset addressing over UTF-8 text.
//!
//! Annotation offsets count Unicode scalar values, not bytes. `CharIndex`
//! maps between the two; ASCII text skips the table entirely.

use crate::brat::Span;

#[derive(Debug, Clone)]
pub struct CharIndex<'a> {
    text: &'a str,
    // byte offset of every char boundary, including the end; None for ASCII
    bounds: Option<Vec<usize>>,
}

impl<'a> CharIndex<'a> {
    pub fn new(text: &'a str) -> Self {
        let bounds = if text.is_ascii() {
            None
        } else {
            let mut v: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
            v.push(text.len());
            Some(v)
        };
        CharIndex { text, bounds }
    }

    pub fn len_chars(&self) -> usize {
        match &self.bounds {
            None => self.text.len(),
            Some(b) => b.len() - 1,
        }
    }

    pub fn byte_offset(&self, char_offset: usize) -> Option<usize> {
        match &self.bounds {
            None => (char_offset <= self.text.len()).then_some(char_offset),
            Some(b) => b.get(char_offset).copied(),
        }
    }

    pub fn slice(&self, span: Span) -> Option<&'a str> {
        let start = self.byte_offset(span.start)?;
        let end = self.byte_offset(span.end)?;
        self.text.get(start..end)
    }

    /// Fragments at `spans`, space-joined.
    pub fn extract(&self, spans: &[Span]) -> Option<String> {
        let mut out = String::new();
        for (i, s) in spans.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(self.slice(*s)?);
        }
        Some(out)
    }
}

pub fn char_len(s: &str) -> usize {
    if s.is_ascii() {
        s.len()
    } else {
        s.chars().count()
    }
}
