//! Segmented documents and clusters.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("empty document")]
    Empty,
    #[error("span {span_index}: {reason}")]
    InvalidSpan { span_index: usize, reason: String },
    #[error("span index {span_index} out of range for document with {len} spans")]
    SpanOutOfRange { span_index: usize, len: usize },
    #[error("duplicate document id '{0}' in cluster")]
    DuplicateId(String),
}

/// Address of a span inside a cluster (or a standalone document, where
/// `doc_index` is 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpanRef {
    pub doc_index: usize,
    pub span_index: usize,
}

impl SpanRef {
    pub fn new(doc_index: usize, span_index: usize) -> Self {
        Self {
            doc_index,
            span_index,
        }
    }
}

impl fmt::Display for SpanRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.doc_index, self.span_index)
    }
}

/// One sentence-like unit of a document.
///
/// `start` and `end` are UTF-8 byte offsets into the owning document's text,
/// so `&doc.text()[span.start..span.end] == span.text`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub doc_index: usize,
    pub span_index: usize,
    pub text: String,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn span_ref(&self) -> SpanRef {
        SpanRef::new(self.doc_index, self.span_index)
    }
}

/// A premise document: its source text plus ordered, non-overlapping spans.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Document {
    id: String,
    text: String,
    spans: Vec<Span>,
}

impl Document {
    /// Builds a document from `(start, end)` byte ranges over `text`.
    pub fn from_ranges(
        id: impl Into<String>,
        text: impl Into<String>,
        ranges: &[(usize, usize)],
    ) -> Result<Self, DocumentError> {
        let text = text.into();
        let mut spans = Vec::with_capacity(ranges.len());
        let mut prev_end = 0;
        for (span_index, &(start, end)) in ranges.iter().enumerate() {
            let bad = |reason: &str| DocumentError::InvalidSpan {
                span_index,
                reason: reason.to_string(),
            };
            if start > end || end > text.len() {
                return Err(bad("offsets outside the document"));
            }
            if start < prev_end {
                return Err(bad("overlaps the previous span"));
            }
            let slice = text.get(start..end).ok_or_else(|| bad("not on a char boundary"))?;
            if slice.trim().is_empty() {
                return Err(bad("blank span"));
            }
            spans.push(Span {
                doc_index: 0,
                span_index,
                text: slice.to_string(),
                start,
                end,
            });
            prev_end = end;
        }
        Ok(Self {
            id: id.into(),
            text,
            spans,
        })
    }

    /// Builds a document whose spans are the given sentences joined by `\n`.
    pub fn from_sentences<S: AsRef<str>>(
        id: impl Into<String>,
        sentences: &[S],
    ) -> Result<Self, DocumentError> {
        let mut text = String::new();
        let mut ranges = Vec::with_capacity(sentences.len());
        for (i, s) in sentences.iter().enumerate() {
            if i > 0 {
                text.push('\n');
            }
            let start = text.len();
            text.push_str(s.as_ref());
            ranges.push((start, text.len()));
        }
        Self::from_ranges(id, text, &ranges)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn span(&self, span_index: usize) -> Option<&Span> {
        self.spans.get(span_index)
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn sentences(&self) -> impl Iterator<Item = &str> {
        self.spans.iter().map(|s| s.text.as_str())
    }

    /// Collapses the document into one span covering all of its sentences.
    /// This is the truncation-free "whole premise" view of the document.
    pub fn as_single_span(&self) -> Result<Document, DocumentError> {
        let (first, last) = match (self.spans.first(), self.spans.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(DocumentError::Empty),
        };
        let mut doc = Document::from_ranges(
            self.id.clone(),
            self.text.clone(),
            &[(first.start, last.end)],
        )?;
        doc.set_doc_index(self.doc_index());
        Ok(doc)
    }

    /// Returns a copy with one span's text replaced; later offsets shift.
    pub fn replace_span_text(&self, span_index: usize, new_text: &str) -> Result<Document, DocumentError> {
        let target = self.spans.get(span_index).ok_or(DocumentError::SpanOutOfRange {
            span_index,
            len: self.spans.len(),
        })?;
        if new_text.trim().is_empty() {
            return Err(DocumentError::InvalidSpan {
                span_index,
                reason: "blank replacement".to_string(),
            });
        }
        let mut text = String::with_capacity(self.text.len() + new_text.len());
        text.push_str(&self.text[..target.start]);
        text.push_str(new_text);
        text.push_str(&self.text[target.end..]);

        let old_len = target.end - target.start;
        let mut spans = self.spans.clone();
        for span in spans.iter_mut().skip(span_index + 1) {
            span.start = span.start - old_len + new_text.len();
            span.end = span.end - old_len + new_text.len();
        }
        let edited = &mut spans[span_index];
        edited.end = edited.start + new_text.len();
        edited.text = new_text.to_string();
        Ok(Document {
            id: self.id.clone(),
            text,
            spans,
        })
    }

    pub(crate) fn doc_index(&self) -> usize {
        self.spans.first().map_or(0, |s| s.doc_index)
    }

    pub(crate) fn set_doc_index(&mut self, doc_index: usize) {
        for span in &mut self.spans {
            span.doc_index = doc_index;
        }
    }
}

/// A topic-grouped set of documents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cluster {
    topic: String,
    documents: Vec<Document>,
}

impl Cluster {
    /// Assigns each document's position as the `doc_index` of its spans.
    pub fn new(topic: impl Into<String>, documents: Vec<Document>) -> Result<Self, DocumentError> {
        let mut seen = HashSet::new();
        let mut documents = documents;
        for (i, doc) in documents.iter_mut().enumerate() {
            if !seen.insert(doc.id.clone()) {
                return Err(DocumentError::DuplicateId(doc.id.clone()));
            }
            doc.set_doc_index(i);
        }
        Ok(Self {
            topic: topic.into(),
            documents,
        })
    }

    pub fn topic(&self) -> &str {
        &self.topic
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn document_index(&self, id: &str) -> Option<usize> {
        self.documents.iter().position(|d| d.id == id)
    }

    pub fn span(&self, r: SpanRef) -> Option<&Span> {
        self.documents.get(r.doc_index)?.span(r.span_index)
    }

    /// Returns a copy with `doc_index`'s document swapped for `doc`.
    pub fn with_document(&self, doc_index: usize, doc: Document) -> Result<Cluster, DocumentError> {
        let mut documents = self.documents.clone();
        let len = documents.len();
        let slot = documents.get_mut(doc_index).ok_or(DocumentError::SpanOutOfRange {
            span_index: doc_index,
            len,
        })?;
        *slot = doc;
        Cluster::new(self.topic.clone(), documents)
    }
}
