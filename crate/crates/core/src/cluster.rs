//! Discrepancy and consensus ranking over a cluster of documents.
//!
//! Every span is used as a hypothesis against every span of every *other*
//! document. Per other document the strongest pairwise score is kept
//! (contradiction for discrepancies, entailment for consensus), and the
//! span's score `omega` is the mean of those per-document maxima.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{Cluster, SpanRef};
use crate::gateway::{GatewayError, ScoreRequestPair, ScorerGateway};
use crate::nli::ScoreTriple;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("cluster analysis needs at least two documents, got {0}")]
    TooFewDocuments(usize),
    #[error("document '{0}' has no spans")]
    EmptyDocument(String),
    #[error("scope refers to document {0}, which is not in the cluster")]
    BadScope(usize),
    #[error("no score for hypothesis {hypothesis} against premise {premise}")]
    MissingScore { hypothesis: SpanRef, premise: SpanRef },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterMode {
    /// Rank by contradiction from the other documents.
    #[default]
    Discrepancy,
    /// Rank by entailment from the other documents.
    Consensus,
    /// Consensus turned upside down (`1 - omega`): least supported first.
    Reversed,
}

impl ClusterMode {
    fn pairwise(self, t: &ScoreTriple) -> f64 {
        match self {
            ClusterMode::Discrepancy => t.c,
            ClusterMode::Consensus | ClusterMode::Reversed => t.e,
        }
    }

    fn finish(self, mean: f64) -> f64 {
        match self {
            ClusterMode::Reversed => 1.0 - mean,
            _ => mean,
        }
    }
}

/// Which spans are ranked. Comparisons always cover the whole cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Scope {
    #[default]
    AllDocs,
    SingleDoc(usize),
}

/// Best-matching span of one other document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Alignment {
    pub doc_id: String,
    pub span: SpanRef,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedClusterSpan {
    pub span: SpanRef,
    pub omega: f64,
    /// One entry per other document, in cluster order.
    pub per_doc_best: Vec<Alignment>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterRanking {
    pub topic: String,
    pub mode: ClusterMode,
    pub scope: Scope,
    /// Sorted by `omega` descending, then by span reference.
    pub entries: Vec<RankedClusterSpan>,
}

impl ClusterRanking {
    pub fn order(&self) -> Vec<SpanRef> {
        self.entries.iter().map(|e| e.span).collect()
    }
}

fn check_cluster(cluster: &Cluster, scope: Scope) -> Result<(), ClusterError> {
    let docs = cluster.documents();
    if docs.len() < 2 {
        return Err(ClusterError::TooFewDocuments(docs.len()));
    }
    if let Some(d) = docs.iter().find(|d| d.is_empty()) {
        return Err(ClusterError::EmptyDocument(d.id().to_string()));
    }
    if let Scope::SingleDoc(i) = scope {
        if i >= docs.len() {
            return Err(ClusterError::BadScope(i));
        }
    }
    Ok(())
}

fn candidates(cluster: &Cluster, scope: Scope) -> Vec<SpanRef> {
    cluster
        .documents()
        .iter()
        .enumerate()
        .filter(|(i, _)| match scope {
            Scope::AllDocs => true,
            Scope::SingleDoc(d) => *i == d,
        })
        .flat_map(|(_, doc)| doc.spans().iter().map(|s| s.span_ref()))
        .collect()
}

fn sort_entries(entries: &mut [RankedClusterSpan]) {
    entries.sort_by(|a, b| b.omega.total_cmp(&a.omega).then(a.span.cmp(&b.span)));
}

/// Ranks spans of `cluster` by discrepancy (or consensus) likelihood. All
/// pairwise scores are requested in one gateway call, so batching, caching
/// and parallelism are the gateway's; the reduction runs in a fixed order.
pub fn rank_cluster(
    cluster: &Cluster,
    mode: ClusterMode,
    scope: Scope,
    gateway: &ScorerGateway,
) -> Result<ClusterRanking, ClusterError> {
    check_cluster(cluster, scope)?;
    let docs = cluster.documents();
    let hyps = candidates(cluster, scope);

    let mut pairs = Vec::new();
    for h in &hyps {
        let hyp_text = &docs[h.doc_index].spans()[h.span_index].text;
        for (k, other) in docs.iter().enumerate() {
            if k == h.doc_index {
                continue;
            }
            for s in other.spans() {
                pairs.push(ScoreRequestPair::new(hyp_text.as_str(), s.text.as_str()));
            }
        }
    }
    let triples = gateway.score_batch(&pairs)?;

    let mut cursor = 0;
    let mut entries = Vec::with_capacity(hyps.len());
    for h in hyps {
        let mut per_doc_best = Vec::with_capacity(docs.len() - 1);
        let mut sum = 0.0;
        for (k, other) in docs.iter().enumerate() {
            if k == h.doc_index {
                continue;
            }
            let block = &triples[cursor..cursor + other.len()];
            cursor += other.len();
            let (best_idx, best) = block
                .iter()
                .map(|t| mode.pairwise(t))
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
            sum += best;
            per_doc_best.push(Alignment {
                doc_id: other.id().to_string(),
                span: SpanRef::new(k, best_idx),
                score: best,
            });
        }
        let omega = mode.finish(sum / per_doc_best.len() as f64);
        entries.push(RankedClusterSpan {
            span: h,
            omega,
            per_doc_best,
        });
    }
    sort_entries(&mut entries);
    Ok(ClusterRanking {
        topic: cluster.topic().to_string(),
        mode,
        scope,
        entries,
    })
}

/// Pairwise triples keyed by `(hypothesis span, premise span)`.
#[derive(Debug, Clone, Default)]
pub struct ScoreMatrix {
    scores: HashMap<(SpanRef, SpanRef), ScoreTriple>,
}

impl ScoreMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, hypothesis: SpanRef, premise: SpanRef, triple: ScoreTriple) {
        self.scores.insert((hypothesis, premise), triple);
    }

    pub fn get(&self, hypothesis: SpanRef, premise: SpanRef) -> Option<&ScoreTriple> {
        self.scores.get(&(hypothesis, premise))
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Nested-loop ranking over a precomputed [`ScoreMatrix`]. Same output
/// contract as [`rank_cluster`]; meant as a test oracle.
pub fn reference_rank(
    cluster: &Cluster,
    mode: ClusterMode,
    scope: Scope,
    matrix: &ScoreMatrix,
) -> Result<ClusterRanking, ClusterError> {
    check_cluster(cluster, scope)?;
    let docs = cluster.documents();
    let mut entries = Vec::new();
    for (i, doc_i) in docs.iter().enumerate() {
        if matches!(scope, Scope::SingleDoc(d) if d != i) {
            continue;
        }
        for j in 0..doc_i.len() {
            let hyp = SpanRef::new(i, j);
            let mut omegas: Vec<f64> = Vec::new();
            let mut per_doc_best = Vec::new();
            for (k, doc_k) in docs.iter().enumerate() {
                if k == i {
                    continue;
                }
                let mut gamma: Vec<f64> = Vec::new();
                for l in 0..doc_k.len() {
                    let prem = SpanRef::new(k, l);
                    let t = matrix.get(hyp, prem).ok_or(ClusterError::MissingScore {
                        hypothesis: hyp,
                        premise: prem,
                    })?;
                    gamma.push(mode.pairwise(t));
                }
                let mut best = 0;
                for l in 1..gamma.len() {
                    if gamma[l] > gamma[best] {
                        best = l;
                    }
                }
                omegas.push(gamma[best]);
                per_doc_best.push(Alignment {
                    doc_id: doc_k.id().to_string(),
                    span: SpanRef::new(k, best),
                    score: gamma[best],
                });
            }
            let mut total = 0.0;
            for v in &omegas {
                total += v;
            }
            entries.push(RankedClusterSpan {
                span: hyp,
                omega: mode.finish(total / omegas.len() as f64),
                per_doc_best,
            });
        }
    }
    sort_entries(&mut entries);
    Ok(ClusterRanking {
        topic: cluster.topic().to_string(),
        mode,
        scope,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::Document;
    use crate::gateway::mock::{LookupBackend, AGREE, DISAGREE};
    use crate::gateway::GatewayConfig;
    use std::sync::Arc;

    fn t(e: f64, n: f64, c: f64) -> ScoreTriple {
        ScoreTriple { e, n, c }
    }

    fn doc(id: &str, sentences: &[&str]) -> Document {
        Document::from_sentences(id, sentences).unwrap()
    }

    fn neutral() -> ScoreTriple {
        t(0.0, 1.0, 0.0)
    }

    #[test]
    fn two_doc_hand_trace() {
        let cluster = Cluster::new("t", vec![doc("A", &["A0"]), doc("B", &["B0", "B1"])]).unwrap();
        let mut table = LookupBackend::new(neutral());
        table.insert("A0", "B0", t(0.1, 0.7, 0.2));
        table.insert("A0", "B1", t(0.1, 0.2, 0.7));
        let gw = ScorerGateway::with_backend(Arc::new(table), GatewayConfig::default()).unwrap();
        let r = rank_cluster(&cluster, ClusterMode::Discrepancy, Scope::AllDocs, &gw).unwrap();
        let a0 = r.entries.iter().find(|e| e.span == SpanRef::new(0, 0)).unwrap();
        assert_eq!(a0.omega, 0.7);
        assert_eq!(a0.per_doc_best.len(), 1);
        assert_eq!(a0.per_doc_best[0].doc_id, "B");
        assert_eq!(a0.per_doc_best[0].span, SpanRef::new(1, 1));
        assert_eq!(a0.per_doc_best[0].score, 0.7);
        assert_eq!(r.order()[0], SpanRef::new(0, 0));
    }

    #[test]
    fn three_doc_mean_of_maxima() {
        let cluster =
            Cluster::new("t", vec![doc("A", &["a"]), doc("B", &["b"]), doc("C", &["c"])]).unwrap();
        let mut table = LookupBackend::new(neutral());
        table.insert("a", "b", t(0.05, 0.05, 0.9));
        table.insert("a", "c", t(0.3, 0.4, 0.3));
        let gw = ScorerGateway::with_backend(Arc::new(table), GatewayConfig::default()).unwrap();
        let r = rank_cluster(&cluster, ClusterMode::Discrepancy, Scope::SingleDoc(0), &gw).unwrap();
        assert_eq!(r.entries.len(), 1);
        assert!((r.entries[0].omega - 0.6).abs() < 1e-15);
    }

    #[test]
    fn planted_cluster_flags_the_flipped_span() {
        let cluster = Cluster::new(
            "t",
            vec![
                doc("A", &["[F=1;P=-] wrong.", "Filler a."]),
                doc("B", &["[F=1;P=+] right.", "Filler b."]),
                doc("C", &["Filler c.", "[F=1;P=+] right too."]),
            ],
        )
        .unwrap();
        let gw = ScorerGateway::mock(0.0, 0);
        let r = rank_cluster(&cluster, ClusterMode::Discrepancy, Scope::AllDocs, &gw).unwrap();
        assert_eq!(r.entries[0].span, SpanRef::new(0, 0));
        assert_eq!(r.entries[0].omega, DISAGREE.c);
        let filler = r.entries.iter().find(|e| e.span == SpanRef::new(1, 1)).unwrap();
        assert!((filler.omega - 0.03).abs() < 1e-15);

        let c = rank_cluster(&cluster, ClusterMode::Consensus, Scope::AllDocs, &gw).unwrap();
        // one of the two other documents disagrees
        assert!((c.entries[0].omega - (AGREE.e + DISAGREE.e) / 2.0).abs() < 1e-15);
        assert_eq!(c.entries[0].span, SpanRef::new(1, 0));
        assert_eq!(c.entries[1].span, SpanRef::new(2, 1));
    }

    #[test]
    fn all_zero_matrix_keeps_index_order() {
        let cluster = Cluster::new("t", vec![doc("A", &["a", "b"]), doc("B", &["c", "d"])]).unwrap();
        let mut m = ScoreMatrix::new();
        for h in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            for p in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                if h.0 != p.0 {
                    m.insert(SpanRef::new(h.0, h.1), SpanRef::new(p.0, p.1), t(0.0, 1.0, 0.0));
                }
            }
        }
        let r = reference_rank(&cluster, ClusterMode::Discrepancy, Scope::AllDocs, &m).unwrap();
        assert!(r.entries.iter().all(|e| e.omega == 0.0));
        assert_eq!(
            r.order(),
            vec![SpanRef::new(0, 0), SpanRef::new(0, 1), SpanRef::new(1, 0), SpanRef::new(1, 1)]
        );
    }

    #[test]
    fn reference_reports_missing_entries() {
        let cluster = Cluster::new("t", vec![doc("A", &["a"]), doc("B", &["b"])]).unwrap();
        assert!(matches!(
            reference_rank(&cluster, ClusterMode::Discrepancy, Scope::AllDocs, &ScoreMatrix::new()),
            Err(ClusterError::MissingScore { .. })
        ));
    }

    #[test]
    fn invalid_clusters_rejected() {
        let gw = ScorerGateway::mock(0.0, 0);
        let single = Cluster::new("t", vec![doc("A", &["a"])]).unwrap();
        assert_eq!(
            rank_cluster(&single, ClusterMode::Discrepancy, Scope::AllDocs, &gw),
            Err(ClusterError::TooFewDocuments(1))
        );
        let two = Cluster::new("t", vec![doc("A", &["a"]), doc("B", &["b"])]).unwrap();
        assert_eq!(
            rank_cluster(&two, ClusterMode::Discrepancy, Scope::SingleDoc(5), &gw),
            Err(ClusterError::BadScope(5))
        );
    }

    #[test]
    fn reversed_mode_inverts_consensus() {
        let cluster = Cluster::new(
            "t",
            vec![doc("A", &["[F=1;P=+] x.", "Filler."]), doc("B", &["[F=1;P=+] y."])],
        )
        .unwrap();
        let gw = ScorerGateway::mock(0.0, 0);
        let r = rank_cluster(&cluster, ClusterMode::Reversed, Scope::AllDocs, &gw).unwrap();
        assert_eq!(r.entries[0].span, SpanRef::new(0, 1));
        assert!((r.entries[0].omega - 0.97).abs() < 1e-12);
    }
}
