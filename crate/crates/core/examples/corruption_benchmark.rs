//! Building a corrupted-cluster benchmark from edit pairs and evaluating
//! discrepancy ranking on it.
//!
//! Run with `cargo run --example corruption_benchmark`.

use entailgine::cluster::{rank_cluster, ClusterMode, Scope};
use entailgine::corruption::{build_corpus, EditPair, JaccardConfig, TargetSelector};
use entailgine::gateway::ScorerGateway;
use entailgine::metrics::{accuracy_at_k, RankedInstance};
use entailgine::{Cluster, Document, SpanRef};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let docs = vec![
        Document::from_sentences(
            "en",
            &["[F=1;P=+] The tower is 330 metres tall.", "[F=2;P=+] It was finished in 1889.", "It is in Paris."],
        )?,
        Document::from_sentences("fr", &["[F=1;P=+] La tour mesure 330 metres.", "[F=2;P=+] Achevee en 1889."])?,
        Document::from_sentences("de", &["[F=2;P=+] Fertiggestellt 1889.", "[F=1;P=+] Der Turm ist 330 Meter hoch."])?,
    ];
    let cluster = Cluster::new("eiffel tower", docs)?;
    let edits = vec![
        EditPair::new("[F=2;P=+] It was finished in 1889.", "[F=2;P=-] It was finished in 1887.", "claim-1"),
        EditPair::new("Paris is large.", "Lyon is small.", "claim-2"),
    ];

    let instances = build_corpus(&edits, std::slice::from_ref(&cluster), &TargetSelector::First, JaccardConfig::default());
    println!("{} of {} edits matched", instances.len(), edits.len());

    let gateway = ScorerGateway::mock(0.0, 0);
    let mut ranked = Vec::new();
    for inst in &instances {
        println!("{}#{}: {:?} -> {:?}", inst.doc_id, inst.span_index, inst.original, inst.replacement);
        let corrupted = inst.apply_to_cluster(&cluster)?;
        let ranking = rank_cluster(&corrupted, ClusterMode::Discrepancy, Scope::SingleDoc(0), &gateway)?;
        let gold = SpanRef::new(0, inst.span_index);
        ranked.push(RankedInstance::new(ranking.order(), gold)?);
        let restored = inst.revert(&corrupted.documents()[0])?;
        assert_eq!(restored.text(), cluster.documents()[0].text());
    }
    println!("A@1 = {}", accuracy_at_k(&ranked, 1)?);
    Ok(())
}
