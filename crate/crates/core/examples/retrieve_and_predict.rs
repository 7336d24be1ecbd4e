//! Document-level verdicts from span retrieval.
//!
//! Run with `cargo run --example retrieve_and_predict`.

use entailgine::gateway::ScorerGateway;
use entailgine::inference::{classify_whole_document, rank_for_retrieval, retrieve_and_predict, score_spans};
use entailgine::Document;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let doc = Document::from_sentences(
        "contract",
        &[
            "This agreement starts on signature.",
            "[F=3;P=-] The receiving party may share confidential information.",
            "[F=4;P=+] Obligations survive termination.",
            "Notices must be in writing.",
        ],
    )?;
    let hypothesis = "[F=3;P=+] Confidential information must not be shared.";
    let gateway = ScorerGateway::mock(0.0, 0);

    let scores = score_spans(hypothesis, &doc, &gateway)?;
    let rankings = rank_for_retrieval(&scores);
    println!("retrieval order (max of e and c):");
    for r in &rankings.by_non_neutral {
        println!("  {:.2} {}", r.score, doc.spans()[r.span.span_index].text);
    }

    let verdict = retrieve_and_predict(&scores, 0.5)?;
    println!(
        "verdict {} from span {}: {}",
        verdict.label,
        verdict.evidence.contradiction,
        doc.spans()[verdict.evidence.contradiction].text
    );

    // a strict threshold turns the same evidence neutral
    println!("at T=0.9: {}", retrieve_and_predict(&scores, 0.9)?.label);

    // without retrieval, the mock reads only the first sentinel of the whole text
    println!("whole document: {}", classify_whole_document(hypothesis, &doc, 0.5, &gateway)?.label);
    Ok(())
}
