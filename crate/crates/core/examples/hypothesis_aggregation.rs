//! Binary decisions from three-way scores, threshold tuning and
//! multi-sentence hypothesis aggregation.
//!
//! Run with `cargo run --example hypothesis_aggregation`.

use entailgine::aggregation::{
    aggregate_hypothesis, balanced_binary_decide, binary_decide, tune_threshold, AggregationMode, BinaryMethod,
    BinaryMethodKind, HypAggregation, TuneObjective,
};
use entailgine::ScoreTriple;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = ScoreTriple::new(0.3, 0.6, 0.1)?;
    for kind in [BinaryMethodKind::EntailThreshold, BinaryMethodKind::ContraThreshold, BinaryMethodKind::BinarySoftmax] {
        let d = binary_decide(&p, BinaryMethod::new(kind, 0.5)?)?;
        println!("{kind:?} at 0.5 on (0.3, 0.6, 0.1): {d:?}");
    }

    let scored: Vec<(ScoreTriple, bool)> = [(0.92, true), (0.71, true), (0.55, false), (0.64, true), (0.2, false), (0.4, false)]
        .into_iter()
        .map(|(e, gold)| (ScoreTriple::new(e, (1.0 - e) / 2.0, (1.0 - e) / 2.0).unwrap(), gold))
        .collect();
    for objective in [TuneObjective::F1Entail, TuneObjective::BalancedAccuracy] {
        let (t, value) = tune_threshold(&scored, BinaryMethodKind::EntailThreshold, objective)?;
        println!("tuned on {objective:?}: T={t:.2} value={value:.3}");
    }

    // a summary with two sentences, each scored against its document
    let sentences = [ScoreTriple::new(0.8, 0.1, 0.1)?, ScoreTriple::new(0.6, 0.2, 0.2)?];
    for mode in [AggregationMode::Soft, AggregationMode::Hard] {
        let score = aggregate_hypothesis(&sentences, HypAggregation { mode, rerank_shift: None })?;
        println!("{mode:?}: {score:.2} -> {:?}", balanced_binary_decide(score, 0.65));
    }
    let shifted = aggregate_hypothesis(
        &sentences,
        HypAggregation {
            mode: AggregationMode::Soft,
            rerank_shift: Some(0.5),
        },
    )?;
    println!("rerank-style soft score: {shifted:.2}");
    Ok(())
}
