//! Scoring sentence pairs through the gateway with the planted-fact mock.
//!
//! Run with `cargo run --example score_pair`.

use entailgine::gateway::{format_input, ScoreRequestPair, ScorerGateway};
use entailgine::{normalize_scores, RawScores};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gateway = ScorerGateway::mock(0.0, 0);
    let pairs = [
        ScoreRequestPair::new("[F=7;P=+] The museum opened in 1902.", "[F=7;P=+] It has been open since 1902."),
        ScoreRequestPair::new("[F=7;P=+] The museum opened in 1902.", "[F=7;P=-] It opened in 1910."),
        ScoreRequestPair::new("[F=7;P=+] The museum opened in 1902.", "The weather was mild."),
    ];
    let scores = gateway.score_batch(&pairs)?;
    for (pair, t) in pairs.iter().zip(&scores) {
        println!("{}", format_input(pair));
        println!("  -> {} (e={:.2} n={:.2} c={:.2})", t.argmax(), t.e, t.n, t.c);
    }

    // scorer logits become validated probabilities
    let p = normalize_scores(RawScores::new(2.0f64.ln(), 0.0, 0.0))?;
    println!("softmax(ln 2, 0, 0) = ({}, {}, {})", p.e, p.n, p.c);

    println!("{:?}", gateway.stats());
    Ok(())
}
