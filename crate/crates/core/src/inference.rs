//! Hypothesis-versus-document inference.
//!
//! A long premise is scored span by span. The per-span triples then serve
//! both as retrieval scores (which spans matter for this hypothesis?) and as
//! the basis of the document verdict: the strongest entailing or
//! contradicting span decides, gated by a threshold `T`. The rerank variant
//! re-scores the hypothesis against a synthetic premise built from the top
//! `K` entailing and contradicting spans, in both block orders, and averages
//! the two results.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{Document, SpanRef};
use crate::gateway::{GatewayError, ScoreRequestPair, ScorerGateway};
use crate::nli::{Label, ScoreTriple};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("empty document")]
    EmptyDocument,
    #[error("rerank depth K must be at least 1")]
    ZeroDepth,
    #[error("threshold {0} is outside [0, 1]")]
    Threshold(f64),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// The scorer's triple for one span of the premise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpanScore {
    pub span: SpanRef,
    pub triple: ScoreTriple,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankedSpan {
    pub span: SpanRef,
    pub score: f64,
}

/// Span orderings by descending `p_e`, `p_c` and `max(p_e, p_c)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalRankings {
    pub by_entailment: Vec<RankedSpan>,
    pub by_contradiction: Vec<RankedSpan>,
    /// The retrieval ranking proper; used for P@R evaluation.
    pub by_non_neutral: Vec<RankedSpan>,
}

/// Per-label maxima over spans. Not a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelMaxima {
    pub e: f64,
    pub n: f64,
    pub c: f64,
}

/// Span index achieving each non-neutral maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub entailment: usize,
    pub contradiction: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictMethod {
    Predict,
    Rerank,
}

/// The two synthetic premises used for reranking.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RerankPremises {
    /// Entailing block, then contradicting block.
    pub entail_first: String,
    /// Contradicting block, then entailing block.
    pub contra_first: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocVerdict {
    pub label: Label,
    pub max_scores: LabelMaxima,
    pub evidence: Evidence,
    pub method: VerdictMethod,
    pub rerank_triple: Option<ScoreTriple>,
    pub rerank_premises: Option<RerankPremises>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RerankConfig {
    pub k: usize,
    pub threshold: f64,
    /// Rerank even when the first pass is neutral.
    pub always_rerank: bool,
}

impl Default for RerankConfig {
    fn default() -> Self {
        Self {
            k: 2,
            threshold: 0.5,
            always_rerank: false,
        }
    }
}

/// The gated decision rule: the stronger of `e` and `c` wins if it exceeds
/// `threshold`; exact ties go to entailment.
pub fn decide(e: f64, c: f64, threshold: f64) -> Label {
    if e.max(c) > threshold {
        if e >= c {
            Label::Entailment
        } else {
            Label::Contradiction
        }
    } else {
        Label::Neutral
    }
}

fn check_threshold(t: f64) -> Result<(), InferenceError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(InferenceError::Threshold(t))
    }
}

/// Scores `hypothesis` against every span of `doc` in one gateway call.
pub fn score_spans(
    hypothesis: &str,
    doc: &Document,
    gateway: &ScorerGateway,
) -> Result<Vec<SpanScore>, InferenceError> {
    if doc.is_empty() {
        return Err(InferenceError::EmptyDocument);
    }
    let pairs: Vec<ScoreRequestPair> = doc
        .spans()
        .iter()
        .map(|s| ScoreRequestPair::new(hypothesis, s.text.as_str()))
        .collect();
    let triples = gateway.score_batch(&pairs)?;
    Ok(doc
        .spans()
        .iter()
        .zip(triples)
        .map(|(s, triple)| SpanScore {
            span: s.span_ref(),
            triple,
        })
        .collect())
}

fn ranked_by(scores: &[SpanScore], key: impl Fn(&ScoreTriple) -> f64) -> Vec<RankedSpan> {
    let mut out: Vec<RankedSpan> = scores
        .iter()
        .map(|s| RankedSpan {
            span: s.span,
            score: key(&s.triple),
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.span.span_index.cmp(&b.span.span_index))
    });
    out
}

pub fn rank_for_retrieval(scores: &[SpanScore]) -> RetrievalRankings {
    RetrievalRankings {
        by_entailment: ranked_by(scores, |t| t.e),
        by_contradiction: ranked_by(scores, |t| t.c),
        by_non_neutral: ranked_by(scores, |t| t.e.max(t.c)),
    }
}

fn first_argmax(scores: &[SpanScore], key: impl Fn(&ScoreTriple) -> f64) -> (usize, f64) {
    let mut best = (scores[0].span.span_index, key(&scores[0].triple));
    for s in &scores[1..] {
        let v = key(&s.triple);
        if v > best.1 || (v == best.1 && s.span.span_index < best.0) {
            best = (s.span.span_index, v);
        }
    }
    best
}

/// Document verdict from the strongest span per label.
pub fn retrieve_and_predict(scores: &[SpanScore], threshold: f64) -> Result<DocVerdict, InferenceError> {
    if scores.is_empty() {
        return Err(InferenceError::EmptyDocument);
    }
    check_threshold(threshold)?;
    let (entail_idx, e) = first_argmax(scores, |t| t.e);
    let (contra_idx, c) = first_argmax(scores, |t| t.c);
    let (_, n) = first_argmax(scores, |t| t.n);
    Ok(DocVerdict {
        label: decide(e, c, threshold),
        max_scores: LabelMaxima { e, n, c },
        evidence: Evidence {
            entailment: entail_idx,
            contradiction: contra_idx,
        },
        method: VerdictMethod::Predict,
        rerank_triple: None,
        rerank_premises: None,
    })
}

/// Builds both rerank premises from the top-`k` spans of each non-neutral
/// ranking. A span in both top-`k` lists appears in both blocks.
pub fn build_rerank_premises(
    doc: &Document,
    rankings: &RetrievalRankings,
    k: usize,
) -> Result<RerankPremises, InferenceError> {
    if doc.is_empty() {
        return Err(InferenceError::EmptyDocument);
    }
    if k == 0 {
        return Err(InferenceError::ZeroDepth);
    }
    let block = |ranking: &[RankedSpan]| -> Vec<&str> {
        ranking
            .iter()
            .take(k)
            .filter_map(|r| doc.span(r.span.span_index))
            .map(|s| s.text.as_str())
            .collect()
    };
    let entail = block(&rankings.by_entailment);
    let contra = block(&rankings.by_contradiction);
    let join = |first: &[&str], second: &[&str]| {
        first.iter().chain(second).copied().collect::<Vec<_>>().join(" ")
    };
    Ok(RerankPremises {
        entail_first: join(&entail, &contra),
        contra_first: join(&contra, &entail),
    })
}

/// Retrieve-and-predict, followed by a rerank pass for non-neutral
/// first-pass verdicts (or always, with `cfg.always_rerank`).
pub fn retrieve_and_rerank(
    hypothesis: &str,
    doc: &Document,
    cfg: &RerankConfig,
    gateway: &ScorerGateway,
) -> Result<DocVerdict, InferenceError> {
    let scores = score_spans(hypothesis, doc, gateway)?;
    let first = retrieve_and_predict(&scores, cfg.threshold)?;
    if first.label == Label::Neutral && !cfg.always_rerank {
        return Ok(first);
    }
    let premises = build_rerank_premises(doc, &rank_for_retrieval(&scores), cfg.k)?;
    let triples = gateway.score_batch(&[
        ScoreRequestPair::new(hypothesis, premises.entail_first.as_str()),
        ScoreRequestPair::new(hypothesis, premises.contra_first.as_str()),
    ])?;
    let averaged = ScoreTriple::mean(&triples[0], &triples[1]);
    Ok(DocVerdict {
        label: decide(averaged.e, averaged.c, cfg.threshold),
        method: VerdictMethod::Rerank,
        rerank_triple: Some(averaged),
        rerank_premises: Some(premises),
        ..first
    })
}

/// Scores the whole document as a single premise (no retrieval).
pub fn classify_whole_document(
    hypothesis: &str,
    doc: &Document,
    threshold: f64,
    gateway: &ScorerGateway,
) -> Result<DocVerdict, InferenceError> {
    let whole = doc.as_single_span().map_err(|_| InferenceError::EmptyDocument)?;
    let scores = score_spans(hypothesis, &whole, gateway)?;
    retrieve_and_predict(&scores, threshold)
}
