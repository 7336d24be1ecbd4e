//! Evaluation metrics on small fixtures.
//!
//! Run with `cargo run --example metrics`.

use entailgine::metrics::{
    accuracy_at_k, balanced_accuracy, f1_class, macro_f1, precision_at_recall, random_ranking_accuracy, RankedInstance,
};
use entailgine::Label::{Contradiction as C, Entailment as E, Neutral as N};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let preds = [C, E, C, N, E, C];
    let golds = [C, E, E, N, C, C];
    println!("F1(C) = {:?}", f1_class(&preds, &golds, &C)?);
    println!("AVG of F1(C), F1(E) = {:.3}", macro_f1(&preds, &golds, &[C, E])?);

    let retrieval = [(0.9, true), (0.8, false), (0.7, true), (0.6, true), (0.5, false)];
    println!("P@R.8 = {}", precision_at_recall(&retrieval, 0.8)?);

    let instances = vec![
        RankedInstance::new(vec!["s3", "s1", "s2"], "s3")?,
        RankedInstance::new(vec!["s2", "s3", "s1"], "s3")?,
        RankedInstance::new(vec!["s1", "s2", "s3"], "s3")?,
    ];
    for k in 1..=3 {
        println!("A@{k} = {:.3}", accuracy_at_k(&instances, k)?);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    println!("random A@1 over 10 spans ~ {:.3}", random_ranking_accuracy(10, 1, 10_000, &mut rng)?);

    let consistent_pred = [true, true, false, true, false, false];
    let consistent_gold = [true, false, false, true, true, false];
    println!("balanced accuracy = {:.3}", balanced_accuracy(&consistent_pred, &consistent_gold)?);
    Ok(())
}
