//! Flagging spans that other documents of a cluster contradict.
//!
//! Run with `cargo run --example cluster_discrepancies`.

use entailgine::cluster::{rank_cluster, ClusterMode, Scope};
use entailgine::gateway::mock::{planted_cluster, PlantedClusterSpec};
use entailgine::gateway::ScorerGateway;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let planted = planted_cluster(&mut rng, "lighthouse", PlantedClusterSpec::default());
    let cluster = &planted.cluster;
    let gateway = ScorerGateway::mock(0.03, 1);

    let ranking = rank_cluster(cluster, ClusterMode::Discrepancy, Scope::AllDocs, &gateway)?;
    println!("planted corruption at {}", planted.corrupted);
    for (i, entry) in ranking.entries.iter().take(3).enumerate() {
        let span = cluster.span(entry.span).unwrap();
        println!("{}. omega={:.3} [{}] {}", i + 1, entry.omega, entry.span, span.text);
        for al in entry.per_doc_best.iter().take(2) {
            println!("     {} ({:.3}) {}", al.doc_id, al.score, cluster.span(al.span).unwrap().text);
        }
    }

    // consensus over one document, answered from the gateway cache
    let consensus = rank_cluster(cluster, ClusterMode::Consensus, Scope::SingleDoc(0), &gateway)?;
    let top = &consensus.entries[0];
    println!("best-supported span of doc0: omega={:.3} {}", top.omega, cluster.span(top.span).unwrap().text);
    println!("{:?}", gateway.stats());
    Ok(())
}
