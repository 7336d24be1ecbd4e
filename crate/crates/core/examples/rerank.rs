//! Retrieve-and-rerank: re-scoring the hypothesis against concatenated
//! evidence in both block orders.
//!
//! Run with `cargo run --example rerank`.

use entailgine::gateway::ScorerGateway;
use entailgine::inference::{retrieve_and_rerank, RerankConfig};
use entailgine::Document;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let doc = Document::from_sentences(
        "article",
        &[
            "[F=1;P=+] The bridge opened in 1932.",
            "It spans the harbour.",
            "[F=1;P=-] Some sources give a later opening date.",
            "[F=1;P=+] Crowds attended the 1932 opening.",
        ],
    )?;
    let gateway = ScorerGateway::mock(0.01, 3);
    let cfg = RerankConfig {
        k: 2,
        ..RerankConfig::default()
    };
    let v = retrieve_and_rerank("[F=1;P=+] The bridge opened in 1932.", &doc, &cfg, &gateway)?;
    let premises = v.rerank_premises.as_ref().expect("first pass is not neutral");
    println!("premise A: {}", premises.entail_first);
    println!("premise B: {}", premises.contra_first);
    println!("first-pass maxima: e={:.3} c={:.3}", v.max_scores.e, v.max_scores.c);
    if let Some(t) = v.rerank_triple {
        println!("averaged rerank scores: e={:.3} n={:.3} c={:.3}", t.e, t.n, t.c);
    }
    // the mock reads only the first sentinel of a premise, so the two block
    // orders disagree and their average is neutral
    println!("verdict: {} ({:?})", v.label, v.method);

    // a neutral first pass skips the second round
    let before = gateway.stats().backend_calls;
    let v = retrieve_and_rerank("[F=9;P=+] Unrelated claim.", &doc, &cfg, &gateway)?;
    println!("neutral: {} after {} backend call(s), first pass only", v.label, gateway.stats().backend_calls - before);
    Ok(())
}
