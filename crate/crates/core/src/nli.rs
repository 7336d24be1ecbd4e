//! NLI labels and score normalization.
//!
//! Backends produce one raw score per class; every algorithm in this crate
//! consumes the softmax-normalized [`ScoreTriple`] instead.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum allowed deviation of `e + n + c` from 1.
pub const SUM_TOLERANCE: f64 = 1e-6;

/// The three NLI classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "e")]
    Entailment,
    #[serde(rename = "n")]
    Neutral,
    #[serde(rename = "c")]
    Contradiction,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Entailment, Label::Neutral, Label::Contradiction];

    /// Single-character serialization token.
    pub fn token(self) -> &'static str {
        match self {
            Label::Entailment => "e",
            Label::Neutral => "n",
            Label::Contradiction => "c",
        }
    }

    pub fn from_token(token: &str) -> Option<Label> {
        match token {
            "e" => Some(Label::Entailment),
            "n" => Some(Label::Neutral),
            "c" => Some(Label::Contradiction),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("raw score for class '{label}' is not finite ({value})")]
    NonFinite { label: Label, value: f64 },
    #[error("probability for class '{label}' is outside [0, 1] ({value})")]
    OutOfRange { label: Label, value: f64 },
    #[error("probabilities sum to {sum}, expected 1 within {SUM_TOLERANCE}")]
    SumDeviation { sum: f64 },
}

/// Unnormalized per-class backend scores (logits).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawScores {
    pub e: f64,
    pub n: f64,
    pub c: f64,
}

impl RawScores {
    pub fn new(e: f64, n: f64, c: f64) -> Self {
        Self { e, n, c }
    }

    pub fn get(&self, label: Label) -> f64 {
        match label {
            Label::Entailment => self.e,
            Label::Neutral => self.n,
            Label::Contradiction => self.c,
        }
    }
}

/// A normalized class distribution for one hypothesis/premise pair.
///
/// Fields are public for cheap access; use [`ScoreTriple::new`] or
/// [`validate_triple`] whenever values cross a trust boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub e: f64,
    pub n: f64,
    pub c: f64,
}

impl ScoreTriple {
    /// Builds a triple, checking range and sum invariants.
    pub fn new(e: f64, n: f64, c: f64) -> Result<Self, ScoreError> {
        validate_triple(Self { e, n, c })
    }

    pub fn get(&self, label: Label) -> f64 {
        match label {
            Label::Entailment => self.e,
            Label::Neutral => self.n,
            Label::Contradiction => self.c,
        }
    }

    /// Class with the highest probability. Ties resolve in `e, n, c` order.
    pub fn argmax(&self) -> Label {
        let mut best = Label::Entailment;
        for label in [Label::Neutral, Label::Contradiction] {
            if self.get(label) > self.get(best) {
                best = label;
            }
        }
        best
    }

    /// Component-wise mean of two triples.
    pub fn mean(a: &ScoreTriple, b: &ScoreTriple) -> ScoreTriple {
        ScoreTriple {
            e: (a.e + b.e) / 2.0,
            n: (a.n + b.n) / 2.0,
            c: (a.c + b.c) / 2.0,
        }
    }
}

/// Softmax over the three raw scores, with max-subtraction for stability.
pub fn normalize_scores(raw: RawScores) -> Result<ScoreTriple, ScoreError> {
    for label in Label::ALL {
        let value = raw.get(label);
        if !value.is_finite() {
            return Err(ScoreError::NonFinite { label, value });
        }
    }
    let max = raw.e.max(raw.n).max(raw.c);
    let e = (raw.e - max).exp();
    let n = (raw.n - max).exp();
    let c = (raw.c - max).exp();
    let sum = e + n + c;
    Ok(ScoreTriple {
        e: e / sum,
        n: n / sum,
        c: c / sum,
    })
}

/// Passes through triples that are valid distributions.
pub fn validate_triple(p: ScoreTriple) -> Result<ScoreTriple, ScoreError> {
    for label in Label::ALL {
        let value = p.get(label);
        if !(0.0..=1.0).contains(&value) {
            return Err(ScoreError::OutOfRange { label, value });
        }
    }
    let sum = p.e + p.n + p.c;
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(ScoreError::SumDeviation { sum });
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Softmax evaluated in a shifted, log-sum-exp form with compensated
    /// summation. Independent of `normalize_scores`' code path.
    fn softmax_oracle(xs: [f64; 3]) -> [f64; 3] {
        let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for x in xs {
            let y = (x - m).exp() - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        let lse = m + sum.ln();
        [(xs[0] - lse).exp(), (xs[1] - lse).exp(), (xs[2] - lse).exp()]
    }

    #[test]
    fn uniform_logits_give_thirds() {
        let p = normalize_scores(RawScores::new(0.0, 0.0, 0.0)).unwrap();
        for v in [p.e, p.n, p.c] {
            assert!(close(v, 1.0 / 3.0, 1e-15));
        }
    }

    #[test]
    fn ln2_logit_gives_half() {
        let p = normalize_scores(RawScores::new(2f64.ln(), 0.0, 0.0)).unwrap();
        assert!(close(p.e, 0.5, 1e-15));
        assert!(close(p.n, 0.25, 1e-15));
        assert!(close(p.c, 0.25, 1e-15));
    }

    #[test]
    fn large_logit_does_not_overflow() {
        let p = normalize_scores(RawScores::new(1000.0, 0.0, 0.0)).unwrap();
        let oracle = softmax_oracle([1000.0, 0.0, 0.0]);
        assert!(close(p.e, oracle[0], 1e-15));
        assert!(close(p.n, oracle[1], 1e-300));
        assert_eq!(p.e, 1.0);
        assert!(p.n < 1e-300 && p.n >= 0.0);
        validate_triple(p).unwrap();
    }

    #[test]
    fn non_finite_is_rejected_by_component() {
        let err = normalize_scores(RawScores::new(0.0, f64::NAN, 0.0)).unwrap_err();
        assert!(matches!(err, ScoreError::NonFinite { label: Label::Neutral, .. }));
        let err = normalize_scores(RawScores::new(0.0, 0.0, f64::INFINITY)).unwrap_err();
        assert!(matches!(err, ScoreError::NonFinite { label: Label::Contradiction, .. }));
    }

    #[test]
    fn validate_examples() {
        assert!(ScoreTriple::new(0.85, 0.10, 0.05).is_ok());
        assert!(matches!(
            ScoreTriple::new(0.9, 0.2, 0.05),
            Err(ScoreError::SumDeviation { .. })
        ));
        assert!(matches!(
            ScoreTriple::new(-0.1, 1.0, 0.1),
            Err(ScoreError::OutOfRange { label: Label::Entailment, .. })
        ));
    }

    #[test]
    fn label_tokens_round_trip() {
        for label in Label::ALL {
            let json = serde_json::to_string(&label).unwrap();
            assert_eq!(json, format!("\"{}\"", label.token()));
            assert_eq!(Label::from_token(label.token()), Some(label));
        }
    }

    proptest! {
        #[test]
        fn normalized_is_valid(e in -1e4f64..1e4, n in -1e4f64..1e4, c in -1e4f64..1e4) {
            let p = normalize_scores(RawScores::new(e, n, c)).unwrap();
            prop_assert!(validate_triple(p).is_ok());
            let oracle = softmax_oracle([e, n, c]);
            prop_assert!(close(p.e, oracle[0], 1e-12));
            prop_assert!(close(p.n, oracle[1], 1e-12));
            prop_assert!(close(p.c, oracle[2], 1e-12));
        }

        #[test]
        fn shift_invariant(e in -100f64..100.0, n in -100f64..100.0, c in -100f64..100.0, k in -100f64..100.0) {
            let a = normalize_scores(RawScores::new(e, n, c)).unwrap();
            let b = normalize_scores(RawScores::new(e + k, n + k, c + k)).unwrap();
            prop_assert!(close(a.e, b.e, 1e-12));
            prop_assert!(close(a.n, b.n, 1e-12));
            prop_assert!(close(a.c, b.c, 1e-12));
        }

        #[test]
        fn argmax_preserved(e in -50f64..50.0, n in -50f64..50.0, c in -50f64..50.0) {
            let raw = RawScores::new(e, n, c);
            let p = normalize_scores(raw).unwrap();
            let raw_best = Label::ALL
                .into_iter()
                .fold(Label::Entailment, |best, l| if raw.get(l) > raw.get(best) { l } else { best });
            prop_assert_eq!(p.argmax(), raw_best);
        }
    }
}
