//! Rule-based sentence segmentation.
//!
//! A boundary is placed after `.`, `!` or `?` when the next non-space
//! character is an uppercase letter or a digit and the token that ends in
//! the punctuation is not a known abbreviation. Fragments shorter than
//! [`SegmenterConfig::min_span_chars`] are merged into the following span
//! (or the previous one when nothing follows).
//!
//! Pre-segmented corpora go through [`ingest_presegmented`] instead.

use std::collections::BTreeSet;

use crate::document::{Document, DocumentError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmenterConfig {
    abbreviations: BTreeSet<String>,
    pub min_span_chars: usize,
}

pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "Dr.", "Mr.", "Mrs.", "Ms.", "St.", "No.", "vs.", "etc.", "e.g.", "i.e.",
];

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            abbreviations: DEFAULT_ABBREVIATIONS.iter().map(|s| s.to_string()).collect(),
            min_span_chars: 2,
        }
    }
}

impl SegmenterConfig {
    /// Adds an abbreviation. Entries must end with '.'; others are ignored.
    pub fn with_abbreviation(mut self, abbreviation: &str) -> Self {
        if abbreviation.ends_with('.') {
            self.abbreviations.insert(abbreviation.to_string());
        }
        self
    }

    pub fn with_min_span_chars(mut self, min_span_chars: usize) -> Self {
        self.min_span_chars = min_span_chars.max(1);
        self
    }

    pub fn abbreviations(&self) -> impl Iterator<Item = &str> {
        self.abbreviations.iter().map(String::as_str)
    }

    fn is_abbreviation(&self, token: &str) -> bool {
        let token = token.trim_start_matches(|c: char| !c.is_alphanumeric());
        self.abbreviations.contains(token)
    }
}

/// Segments raw text into a [`Document`] with id `id`.
pub fn segment(id: &str, text: &str, cfg: &SegmenterConfig) -> Document {
    let ranges = segment_ranges(text, cfg);
    Document::from_ranges(id, text, &ranges).expect("segmenter produced invalid ranges")
}

/// Byte ranges of the sentences in `text`.
pub fn segment_ranges(text: &str, cfg: &SegmenterConfig) -> Vec<(usize, usize)> {
    let mut raw = Vec::new();
    let mut seg_start = 0;
    for boundary in boundaries(text, cfg) {
        raw.push((seg_start, boundary));
        seg_start = boundary;
    }
    raw.push((seg_start, text.len()));

    let trimmed: Vec<(usize, usize)> = raw
        .into_iter()
        .filter_map(|(s, e)| trim_range(text, s, e))
        .collect();
    merge_fragments(text, trimmed, cfg.min_span_chars.max(1))
}

fn boundaries(text: &str, cfg: &SegmenterConfig) -> Vec<usize> {
    let mut out = Vec::new();
    for (i, ch) in text.char_indices() {
        if !matches!(ch, '.' | '!' | '?') {
            continue;
        }
        let end = i + ch.len_utf8();
        let rest = &text[end..];
        let after_ws = rest.trim_start();
        if after_ws.len() == rest.len() {
            continue;
        }
        match after_ws.chars().next() {
            Some(next) if next.is_uppercase() || next.is_numeric() => {}
            _ => continue,
        }
        let token_start = text[..end]
            .rfind(char::is_whitespace)
            .map_or(0, |p| p + text[p..].chars().next().map_or(1, char::len_utf8));
        if cfg.is_abbreviation(&text[token_start..end]) {
            continue;
        }
        out.push(end);
    }
    out
}

fn trim_range(text: &str, start: usize, end: usize) -> Option<(usize, usize)> {
    let slice = &text[start..end];
    let lead = slice.len() - slice.trim_start().len();
    let trail = slice.len() - slice.trim_end().len();
    if lead == slice.len() {
        None
    } else {
        Some((start + lead, end - trail))
    }
}

fn merge_fragments(text: &str, ranges: Vec<(usize, usize)>, min_chars: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::with_capacity(ranges.len());
    let mut carry: Option<usize> = None;
    let last = ranges.len().saturating_sub(1);
    for (i, (start, end)) in ranges.into_iter().enumerate() {
        let start = carry.take().unwrap_or(start);
        let short = text[start..end].chars().count() < min_chars;
        if short && i < last {
            carry = Some(start);
        } else if short && !out.is_empty() {
            out.last_mut().expect("non-empty").1 = end;
        } else {
            out.push((start, end));
        }
    }
    out
}

/// One span per non-blank line; spans are addressed over the lines joined
/// with single newlines.
pub fn ingest_presegmented<S: AsRef<str>>(id: &str, lines: &[S]) -> Result<Document, DocumentError> {
    let mut text = String::new();
    let mut ranges = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if i > 0 {
            text.push('\n');
        }
        let start = text.len();
        text.push_str(line.as_ref());
        if !line.as_ref().trim().is_empty() {
            ranges.push((start, text.len()));
        }
    }
    if ranges.is_empty() {
        return Err(DocumentError::Empty);
    }
    Document::from_ranges(id, text, &ranges)
}
