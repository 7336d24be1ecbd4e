//! Binary decisions from three-way scores, threshold tuning, and
//! aggregation of multi-sentence hypotheses.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{balanced_accuracy, f1_class};
use crate::nli::ScoreTriple;

/// Number of thresholds searched by [`tune_threshold`]: 0.00, 0.05, …, 1.00.
pub const GRID_POINTS: usize = 21;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregationError {
    #[error("binary softmax is undefined when p_e + p_c = 0")]
    DegenerateBinarySoftmax,
    #[error("threshold tuning needs at least one positive and one negative example")]
    SingleClass,
    #[error("nothing to aggregate")]
    Empty,
    #[error("threshold {0} is outside [0, 1]")]
    Threshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinaryMethodKind {
    /// Entail iff `p_e > T`.
    EntailThreshold,
    /// Not-entail iff `p_c > T`.
    ContraThreshold,
    /// Entail iff `p_e / (p_e + p_c) > T`.
    BinarySoftmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMethod {
    pub kind: BinaryMethodKind,
    pub threshold: f64,
}

impl BinaryMethod {
    pub fn new(kind: BinaryMethodKind, threshold: f64) -> Result<Self, AggregationError> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(AggregationError::Threshold(threshold));
        }
        Ok(Self { kind, threshold })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryDecision {
    Entail,
    NotEntail,
}

/// Entailment probability renormalized without the neutral class. Equal to
/// a softmax over the entailment and contradiction logits alone.
pub fn binary_softmax(p: &ScoreTriple) -> Result<f64, AggregationError> {
    let denom = p.e + p.c;
    if denom <= 0.0 {
        return Err(AggregationError::DegenerateBinarySoftmax);
    }
    Ok(p.e / denom)
}

pub fn binary_decide(p: &ScoreTriple, method: BinaryMethod) -> Result<BinaryDecision, AggregationError> {
    let t = method.threshold;
    let entail = match method.kind {
        BinaryMethodKind::EntailThreshold => p.e > t,
        BinaryMethodKind::ContraThreshold => p.c <= t,
        BinaryMethodKind::BinarySoftmax => binary_softmax(p)? > t,
    };
    Ok(if entail {
        BinaryDecision::Entail
    } else {
        BinaryDecision::NotEntail
    })
}

/// What [`tune_threshold`] maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TuneObjective {
    #[default]
    F1Entail,
    BalancedAccuracy,
}

/// `i * 0.05` for `i` in `0..=20`.
pub fn threshold_grid() -> [f64; GRID_POINTS] {
    std::array::from_fn(|i| i as f64 / 20.0)
}

/// Objective value of one threshold on a labelled set (`true` = entail).
pub fn evaluate_threshold(
    scored: &[(ScoreTriple, bool)],
    kind: BinaryMethodKind,
    threshold: f64,
    objective: TuneObjective,
) -> Result<f64, AggregationError> {
    let method = BinaryMethod::new(kind, threshold)?;
    let preds = scored
        .iter()
        .map(|(p, _)| binary_decide(p, method).map(|d| d == BinaryDecision::Entail))
        .collect::<Result<Vec<bool>, _>>()?;
    let golds: Vec<bool> = scored.iter().map(|(_, g)| *g).collect();
    let value = match objective {
        TuneObjective::F1Entail => f1_class(&preds, &golds, &true).map(|prf| prf.f1),
        TuneObjective::BalancedAccuracy => balanced_accuracy(&preds, &golds),
    };
    value.map_err(|_| AggregationError::SingleClass)
}

/// Best threshold on the 0.05 grid; ties resolve to the smallest threshold.
pub fn tune_threshold(
    scored: &[(ScoreTriple, bool)],
    kind: BinaryMethodKind,
    objective: TuneObjective,
) -> Result<(f64, f64), AggregationError> {
    let has_pos = scored.iter().any(|(_, g)| *g);
    let has_neg = scored.iter().any(|(_, g)| !*g);
    if !has_pos || !has_neg {
        return Err(AggregationError::SingleClass);
    }
    let mut best: Option<(f64, f64)> = None;
    for t in threshold_grid() {
        let value = evaluate_threshold(scored, kind, t, objective)?;
        if best.is_none_or(|(_, v)| value > v) {
            best = Some((t, value));
        }
    }
    Ok(best.expect("grid is non-empty"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationMode {
    /// Mean over hypothesis sentences.
    #[default]
    Soft,
    /// Minimum over hypothesis sentences.
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HypAggregation {
    pub mode: AggregationMode,
    /// Set when the per-sentence triples come from reranked verdicts; each
    /// sentence then contributes `p_e - p_c + shift`.
    pub rerank_shift: Option<f64>,
}

/// Combines the per-sentence results of a multi-sentence hypothesis into a
/// single ranking score. In rerank mode the score may leave [0, 1].
pub fn aggregate_hypothesis(span_results: &[ScoreTriple], agg: HypAggregation) -> Result<f64, AggregationError> {
    if span_results.is_empty() {
        return Err(AggregationError::Empty);
    }
    let values = span_results.iter().map(|p| match agg.rerank_shift {
        Some(t) => p.e - p.c + t,
        None => p.e,
    });
    Ok(match agg.mode {
        AggregationMode::Soft => values.sum::<f64>() / span_results.len() as f64,
        AggregationMode::Hard => values.fold(f64::INFINITY, f64::min),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Consistency {
    Consistent,
    Inconsistent,
}

pub fn balanced_binary_decide(score: f64, threshold: f64) -> Consistency {
    if score > threshold {
        Consistency::Consistent
    } else {
        Consistency::Inconsistent
    }
}
