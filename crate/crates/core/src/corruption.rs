//! Planting realistic factual corruptions into cluster documents.
//!
//! An edit pair is a small real-world revision of one sentence (`before`
//! and `after`). An edit is matched to the target document's sentence with
//! the highest word-level Jaccard similarity to either side; the side that
//! agrees better with that sentence is taken as the current fact, and the
//! other side replaces the sentence.

use std::collections::HashSet;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::document::{Cluster, Document, DocumentError};

/// Edits whose two sides are at most this similar are skipped.
pub const EDIT_SIMILARITY_GATE: f64 = 0.25;
/// Edits whose best document sentence is at most this similar are skipped.
pub const MATCH_SIMILARITY_GATE: f64 = 0.2;

const TRAILING_PUNCTUATION: &[char] = &['.', ',', ';', ':', '!', '?'];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditPair {
    pub before: String,
    pub after: String,
    pub claim_id: String,
}

impl EditPair {
    pub fn new(before: impl Into<String>, after: impl Into<String>, claim_id: impl Into<String>) -> Self {
        Self {
            before: before.into(),
            after: after.into(),
            claim_id: claim_id.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditSide {
    Before,
    After,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditProvenance {
    pub claim_id: String,
    /// The edit side that was planted as the replacement.
    pub replacement_side: EditSide,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptionInstance {
    pub topic: String,
    pub doc_id: String,
    pub span_index: usize,
    pub original: String,
    pub replacement: String,
    pub provenance: EditProvenance,
}

impl CorruptionInstance {
    /// The document with the corruption planted.
    pub fn apply(&self, doc: &Document) -> Result<Document, DocumentError> {
        doc.replace_span_text(self.span_index, &self.replacement)
    }

    /// Undoes [`apply`](Self::apply).
    pub fn revert(&self, doc: &Document) -> Result<Document, DocumentError> {
        doc.replace_span_text(self.span_index, &self.original)
    }

    /// The cluster with the corruption planted into its target document.
    pub fn apply_to_cluster(&self, cluster: &Cluster) -> Result<Cluster, DocumentError> {
        let idx = cluster
            .document_index(&self.doc_id)
            .ok_or_else(|| DocumentError::InvalidSpan {
                span_index: self.span_index,
                reason: format!("document '{}' not in cluster", self.doc_id),
            })?;
        let edited = self.apply(&cluster.documents()[idx])?;
        cluster.with_document(idx, edited)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct JaccardConfig {
    pub lowercase: bool,
    pub strip_trailing_punctuation: bool,
}

impl Default for JaccardConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_trailing_punctuation: true,
        }
    }
}

fn tokens(text: &str, cfg: JaccardConfig) -> HashSet<String> {
    text.split_whitespace()
        .flat_map(|t| t.split('-'))
        .map(|t| {
            if cfg.strip_trailing_punctuation {
                t.trim_end_matches(TRAILING_PUNCTUATION)
            } else {
                t
            }
        })
        .filter(|t| !t.is_empty())
        .map(|t| if cfg.lowercase { t.to_lowercase() } else { t.to_string() })
        .collect()
}

/// Word-level Jaccard similarity; hyphenated words count as separate words.
pub fn jaccard(a: &str, b: &str, cfg: JaccardConfig) -> f64 {
    let ta = tokens(a, cfg);
    let tb = tokens(b, cfg);
    if ta.is_empty() && tb.is_empty() {
        return 1.0;
    }
    let inter = ta.intersection(&tb).count();
    let union = ta.len() + tb.len() - inter;
    inter as f64 / union as f64
}

/// Matches one edit against `doc`; `None` when a gate rejects it.
pub fn match_edit(
    edit: &EditPair,
    doc: &Document,
    topic: &str,
    cfg: JaccardConfig,
) -> Option<CorruptionInstance> {
    let edit_sim = jaccard(&edit.before, &edit.after, cfg);
    if edit_sim <= EDIT_SIMILARITY_GATE {
        debug!("edit {}: sides too dissimilar ({edit_sim:.3})", edit.claim_id);
        return None;
    }
    let mut best: Option<(usize, f64, f64, f64)> = None;
    for span in doc.spans() {
        let jb = jaccard(&span.text, &edit.before, cfg);
        let ja = jaccard(&span.text, &edit.after, cfg);
        let m = jb.max(ja);
        if best.is_none_or(|(_, bm, _, _)| m > bm) {
            best = Some((span.span_index, m, jb, ja));
        }
    }
    let (span_index, sim, jb, ja) = best?;
    if sim <= MATCH_SIMILARITY_GATE {
        debug!("edit {}: no sentence of '{}' is similar enough ({sim:.3})", edit.claim_id, doc.id());
        return None;
    }
    // the side closer to the current sentence is the current fact
    let (replacement, side) = if jb > ja {
        (&edit.after, EditSide::After)
    } else if ja > jb {
        (&edit.before, EditSide::Before)
    } else {
        (&edit.after, EditSide::After)
    };
    let original = &doc.spans()[span_index].text;
    if replacement == original {
        debug!("edit {}: replacement equals the current sentence", edit.claim_id);
        return None;
    }
    Some(CorruptionInstance {
        topic: topic.to_string(),
        doc_id: doc.id().to_string(),
        span_index,
        original: original.clone(),
        replacement: replacement.clone(),
        provenance: EditProvenance {
            claim_id: edit.claim_id.clone(),
            replacement_side: side,
        },
    })
}

/// Which document of each cluster receives corruptions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum TargetSelector {
    /// The cluster's first document.
    #[default]
    First,
    /// The document with this id; clusters without it are skipped.
    ById(String),
}

impl TargetSelector {
    fn select<'a>(&self, cluster: &'a Cluster) -> Option<&'a Document> {
        match self {
            TargetSelector::First => cluster.documents().first(),
            TargetSelector::ById(id) => cluster.documents().iter().find(|d| d.id() == id),
        }
    }
}

/// Matches every edit against the target document of every cluster.
/// Output is ordered by (cluster index, edit index).
pub fn build_corpus(
    edits: &[EditPair],
    clusters: &[Cluster],
    selector: &TargetSelector,
    cfg: JaccardConfig,
) -> Vec<CorruptionInstance> {
    clusters
        .iter()
        .filter_map(|c| selector.select(c).map(|d| (c, d)))
        .flat_map(|(cluster, doc)| {
            edits
                .iter()
                .filter_map(move |edit| match_edit(edit, doc, cluster.topic(), cfg))
        })
        .collect()
}
