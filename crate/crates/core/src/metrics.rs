//! Evaluation metrics: per-class F1, precision at a recall level,
//! accuracy@K over rankings, and balanced accuracy.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::SpanRef;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("predictions ({preds}) and golds ({golds}) differ in length")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("no instances")]
    Empty,
    #[error("no positive gold items")]
    NoPositives,
    #[error("golds contain only one class")]
    SingleClass,
    #[error("gold item must appear exactly once in the ranking (found {0})")]
    GoldCount(usize),
    #[error("recall {0} is outside (0, 1]")]
    RecallLevel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn check_lengths<T>(preds: &[T], golds: &[T]) -> Result<(), MetricError> {
    if preds.len() != golds.len() {
        return Err(MetricError::LengthMismatch {
            preds: preds.len(),
            golds: golds.len(),
        });
    }
    if preds.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(())
}

/// Precision, recall and F1 of `class`. Undefined ratios count as 0.
pub fn f1_class<T: PartialEq>(preds: &[T], golds: &[T], class: &T) -> Result<Prf, MetricError> {
    check_lengths(preds, golds)?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (p, g) in preds.iter().zip(golds) {
        match (p == class, g == class) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    // one rounding from exact counts, so equal ratios compare equal
    let f1 = ratio(2 * tp, 2 * tp + fp + fn_);
    Ok(Prf {
        precision,
        recall,
        f1,
    })
}

/// Unweighted mean of the F1 scores of `classes`.
pub fn macro_f1<T: PartialEq>(preds: &[T], golds: &[T], classes: &[T]) -> Result<f64, MetricError> {
    if classes.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut sum = 0.0;
    for class in classes {
        sum += f1_class(preds, golds, class)?.f1;
    }
    Ok(sum / classes.len() as f64)
}

/// Precision of the shortest score-sorted prefix whose recall reaches
/// `recall_level`. Items with equal scores enter the prefix together.
pub fn precision_at_recall(scores: &[(f64, bool)], recall_level: f64) -> Result<f64, MetricError> {
    if !(recall_level > 0.0 && recall_level <= 1.0) {
        return Err(MetricError::RecallLevel(recall_level.to_string()));
    }
    let positives = scores.iter().filter(|(_, g)| *g).count();
    if positives == 0 {
        return Err(MetricError::NoPositives);
    }
    let mut sorted: Vec<(f64, bool)> = scores.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let needed = recall_level * positives as f64;
    let (mut tp, mut taken) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let score = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == score {
            tp += usize::from(sorted[i].1);
            taken += 1;
            i += 1;
        }
        if tp as f64 >= needed - 1e-9 {
            return Ok(tp as f64 / taken as f64);
        }
    }
    unreachable!("the full list always reaches recall 1")
}

/// A ranking paired with its single gold item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedInstance<R = SpanRef> {
    ranking: Vec<R>,
    gold: R,
}

impl<R: PartialEq> RankedInstance<R> {
    pub fn new(ranking: Vec<R>, gold: R) -> Result<Self, MetricError> {
        let count = ranking.iter().filter(|r| **r == gold).count();
        if count != 1 {
            return Err(MetricError::GoldCount(count));
        }
        Ok(Self { ranking, gold })
    }

    /// 1-based position of the gold item.
    pub fn gold_rank(&self) -> usize {
        self.ranking
            .iter()
            .position(|r| *r == self.gold)
            .expect("checked at construction")
            + 1
    }

    pub fn ranking(&self) -> &[R] {
        &self.ranking
    }

    pub fn gold(&self) -> &R {
        &self.gold
    }
}

/// Fraction of instances whose gold item is ranked within the top `k`.
pub fn accuracy_at_k<R: PartialEq>(instances: &[RankedInstance<R>], k: usize) -> Result<f64, MetricError> {
    if instances.is_empty() {
        return Err(MetricError::Empty);
    }
    let hits = instances.iter().filter(|i| i.gold_rank() <= k).count();
    Ok(hits as f64 / instances.len() as f64)
}

/// Mean of the per-class recalls of a binary task (`true` = positive).
pub fn balanced_accuracy(preds: &[bool], golds: &[bool]) -> Result<f64, MetricError> {
    check_lengths(preds, golds)?;
    if !golds.iter().any(|g| *g) || golds.iter().all(|g| *g) {
        return Err(MetricError::SingleClass);
    }
    let (mut tp, mut fn_, mut tn, mut fp) = (0u64, 0u64, 0u64, 0u64);
    for (p, g) in preds.iter().zip(golds) {
        match (*p, *g) {
            (true, true) => tp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
        }
    }
    // (tp/P + tn/N) / 2 over a common denominator, rounded once
    let (pos, neg) = (tp + fn_, tn + fp);
    Ok((tp * neg + tn * pos) as f64 / (2 * pos * neg) as f64)
}

/// Accuracy@K of uniformly random rankings of `m` items, over `trials`
/// Monte Carlo draws.
pub fn random_ranking_accuracy<G: Rng>(m: usize, k: usize, trials: usize, rng: &mut G) -> Result<f64, MetricError> {
    if m == 0 || trials == 0 {
        return Err(MetricError::Empty);
    }
    let mut ranking: Vec<usize> = (0..m).collect();
    let mut instances = Vec::with_capacity(trials);
    for _ in 0..trials {
        ranking.shuffle(rng);
        let gold = rng.gen_range(0..m);
        instances.push(RankedInstance::new(ranking.clone(), gold)?);
    }
    accuracy_at_k(&instances, k)
}
