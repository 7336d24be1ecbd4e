//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Mock and lookup backends only.

use std::collections::HashMap;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use entailgine::aggregation::{
    binary_softmax, threshold_grid, tune_threshold, BinaryMethodKind, TuneObjective, GRID_POINTS,
};
use entailgine::cluster::{rank_cluster, reference_rank, ClusterMode, ScoreMatrix, Scope};
use entailgine::corruption::{build_corpus, jaccard, EditPair, EditSide, JaccardConfig, TargetSelector};
use entailgine::gateway::mock::{planted_cluster, LookupBackend, PlantedClusterSpec};
use entailgine::gateway::{GatewayConfig, ScoreRequestPair, ScorerGateway};
use entailgine::inference::{
    build_rerank_premises, rank_for_retrieval, retrieve_and_rerank, RerankConfig, SpanScore, VerdictMethod,
};
use entailgine::metrics::{
    accuracy_at_k, balanced_accuracy, f1_class, precision_at_recall, random_ranking_accuracy, RankedInstance,
};
use entailgine::{normalize_scores, Cluster, Document, Label, RawScores, ScoreTriple, SpanRef};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_triple(rng: &mut impl Rng) -> ScoreTriple {
    let raw = RawScores::new(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));
    normalize_scores(raw).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    for c in 0..100 {
        let n_docs = rng.gen_range(2..=5);
        let docs: Vec<Document> = (0..n_docs)
            .map(|d| {
                let n_spans = rng.gen_range(1..=6);
                let sentences: Vec<String> = (0..n_spans).map(|s| format!("c{c} d{d} s{s}")).collect();
                Document::from_sentences(format!("d{d}"), &sentences).unwrap()
            })
            .collect();
        let cluster = Cluster::new(format!("cluster {c}"), docs).unwrap();
        let mut table = LookupBackend::strict();
        let mut matrix = ScoreMatrix::new();
        for hd in cluster.documents() {
            for h in hd.spans() {
                for pd in cluster.documents() {
                    for p in pd.spans() {
                        if h.doc_index != p.doc_index {
                            let t = random_triple(&mut rng);
                            table.insert(&h.text, &p.text, t);
                            matrix.insert(h.span_ref(), p.span_ref(), t);
                        }
                    }
                }
            }
        }
        let gw = ScorerGateway::with_backend(Arc::new(table), GatewayConfig::default()).unwrap();
        let scopes = [Scope::AllDocs, Scope::SingleDoc(rng.gen_range(0..n_docs))];
        for mode in [ClusterMode::Discrepancy, ClusterMode::Consensus, ClusterMode::Reversed] {
            for scope in scopes {
                let fast = rank_cluster(&cluster, mode, scope, &gw).map_err(|e| e.to_string())?;
                let slow = reference_rank(&cluster, mode, scope, &matrix).map_err(|e| e.to_string())?;
                ensure(fast == slow, || format!("cluster {c}, {mode:?}, {scope:?} differs from the reference"))?;
                checked += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("{checked} rankings over 100 clusters identical to the nested-loop reference in {elapsed:.2?}"))
}

fn planted_recovery() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let planted: Vec<_> = (0..50)
        .map(|i| planted_cluster(&mut rng, &format!("topic {i}"), PlantedClusterSpec::default()))
        .collect();
    let mut a1 = Vec::new();
    for jitter in [0.0, 0.03] {
        let gw = ScorerGateway::mock(jitter, 7);
        let mut instances = Vec::new();
        for p in &planted {
            let r = rank_cluster(&p.cluster, ClusterMode::Discrepancy, Scope::AllDocs, &gw).map_err(|e| e.to_string())?;
            instances.push(RankedInstance::new(r.order(), p.corrupted).map_err(|e| e.to_string())?);
        }
        a1.push(accuracy_at_k(&instances, 1).map_err(|e| e.to_string())?);
    }
    let elapsed = start.elapsed();
    ensure(a1[0] == 1.0, || format!("A@1 at jitter 0 is {}", a1[0]))?;
    ensure(a1[1] >= 0.95, || format!("A@1 at jitter 0.03 is {}", a1[1]))?;
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("A@1 = {} (jitter 0), {} (jitter 0.03), 50 clusters of 11 docs in {elapsed:.2?}", a1[0], a1[1]))
}

fn random_baseline() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut parts = Vec::new();
    for (m, k) in [(10, 1), (10, 5), (8, 3), (88, 10)] {
        let acc = random_ranking_accuracy(m, k, 10_000, &mut rng).map_err(|e| e.to_string())?;
        let expected = k as f64 / m as f64;
        ensure((acc - expected).abs() <= 0.02, || format!("A@{k} over m={m}: {acc} vs {expected}"))?;
        parts.push(format!("A@{k}/m={m}: {acc:.4}"));
    }
    Ok(parts.join(", "))
}

fn binary_softmax_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let (e, n, c) = (rng.gen_range(-15.0..15.0), rng.gen_range(-15.0..15.0), rng.gen_range(-15.0..15.0));
        let p = normalize_scores(RawScores::new(e, n, c)).unwrap();
        let renorm = binary_softmax(&p).unwrap();
        let from_logits = 1.0 / (1.0 + f64::exp(c - e));
        let from_probs = 1.0 / (1.0 + f64::exp(p.c.ln() - p.e.ln()));
        worst = worst.max((renorm - from_logits).abs()).max((renorm - from_probs).abs());
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("10000 triples, max deviation {worst:e}"))
}

/// Exhaustive search written from scratch: confusion counts per grid point,
/// first strict maximum wins.
fn brute_force_tune(data: &[(ScoreTriple, bool)], kind: BinaryMethodKind, objective: TuneObjective) -> (f64, f64) {
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for i in 0..=20 {
        let t = i as f64 / 20.0;
        let (mut tp, mut fp, mut tn, mut fn_) = (0.0, 0.0, 0.0, 0.0);
        for (p, gold) in data {
            let entail = match kind {
                BinaryMethodKind::EntailThreshold => p.e > t,
                BinaryMethodKind::ContraThreshold => p.c <= t,
                BinaryMethodKind::BinarySoftmax => p.e / (p.e + p.c) > t,
            };
            match (entail, *gold) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, false) => tn += 1.0,
                (false, true) => fn_ += 1.0,
            }
        }
        // single divisions of exact counts: mathematically tied grid points
        // must compare equal for the smallest-threshold rule
        let value = match objective {
            TuneObjective::F1Entail => {
                if tp == 0.0 {
                    0.0
                } else {
                    2.0 * tp / (2.0 * tp + fp + fn_)
                }
            }
            TuneObjective::BalancedAccuracy => {
                let (pos, neg) = (tp + fn_, tn + fp);
                (tp * neg + tn * pos) / (2.0 * pos * neg)
            }
        };
        if value > best.1 {
            best = (t, value);
        }
    }
    best
}

fn tuning_matches_brute_force() -> Outcome {
    let grid = threshold_grid();
    ensure(grid.len() == 21 && GRID_POINTS == 21, || format!("grid has {} points", grid.len()))?;
    ensure(grid.iter().enumerate().all(|(i, t)| (t - 0.05 * i as f64).abs() < 1e-12), || "grid spacing".into())?;

    let t = |e: f64, c: f64| ScoreTriple::new(e, 1.0 - e - c, c).unwrap();
    let separable: Vec<_> = (0..10).map(|i| if i % 2 == 0 { (t(0.9, 0.0), true) } else { (t(0.1, 0.0), false) }).collect();
    let shifted: Vec<_> = (0..10).map(|i| if i % 2 == 0 { (t(0.9, 0.0), true) } else { (t(0.12, 0.0), false) }).collect();
    let identical: Vec<_> = (0..6).map(|i| (t(0.4, 0.3), i % 2 == 0)).collect();
    let mut fixtures = vec![separable.clone(), shifted.clone(), identical.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let n = rng.gen_range(2..40);
        let mut data: Vec<_> = (0..n).map(|_| (random_triple(&mut rng), rng.gen_bool(0.5))).collect();
        data[0].1 = true;
        data[1].1 = false;
        fixtures.push(data);
    }
    let kinds = [BinaryMethodKind::EntailThreshold, BinaryMethodKind::ContraThreshold, BinaryMethodKind::BinarySoftmax];
    let objectives = [TuneObjective::F1Entail, TuneObjective::BalancedAccuracy];
    let mut compared = 0;
    for (f, data) in fixtures.iter().enumerate() {
        for kind in kinds {
            for objective in objectives {
                let got = tune_threshold(data, kind, objective).map_err(|e| e.to_string())?;
                let want = brute_force_tune(data, kind, objective);
                ensure(got.0 == want.0 && (got.1 - want.1).abs() < 1e-12, || {
                    format!("fixture {f}, {kind:?}/{objective:?}: {got:?} vs {want:?}")
                })?;
                compared += 1;
            }
        }
    }
    let sep = tune_threshold(&separable, BinaryMethodKind::EntailThreshold, TuneObjective::F1Entail).unwrap();
    let shf = tune_threshold(&shifted, BinaryMethodKind::EntailThreshold, TuneObjective::F1Entail).unwrap();
    let idt = tune_threshold(&identical, BinaryMethodKind::EntailThreshold, TuneObjective::F1Entail).unwrap();
    ensure(idt.0 == 0.0, || format!("identical triples tuned to {}", idt.0))?;
    Ok(format!(
        "21-point grid; {compared} tunings equal brute force; separable T*={} F1={}, shifted T*={}, identical T*={}",
        sep.0, sep.1, shf.0, idt.0
    ))
}

fn rerank_construction() -> Outcome {
    let doc = Document::from_sentences("d", &["E1", "N1", "C2", "E2", "C1"]).unwrap();
    let span_triples = [
        ("E1", t3(0.9, 0.05, 0.05)),
        ("N1", t3(0.1, 0.8, 0.1)),
        ("C2", t3(0.1, 0.1, 0.8)),
        ("E2", t3(0.8, 0.1, 0.1)),
        ("C1", t3(0.05, 0.05, 0.9)),
    ];
    let scores: Vec<SpanScore> = span_triples
        .iter()
        .enumerate()
        .map(|(i, (_, t))| SpanScore { span: SpanRef::new(0, i), triple: *t })
        .collect();
    let premises = build_rerank_premises(&doc, &rank_for_retrieval(&scores), 2).map_err(|e| e.to_string())?;
    ensure(premises.entail_first == "E1 E2 C1 C2", || format!("A = {:?}", premises.entail_first))?;
    ensure(premises.contra_first == "C1 C2 E1 E2", || format!("B = {:?}", premises.contra_first))?;

    // end to end, and with the second-pass answers swapped
    let second = [t3(0.8, 0.1, 0.1), t3(0.6, 0.2, 0.2)];
    let mut verdicts = Vec::new();
    for order in [[0, 1], [1, 0]] {
        let mut table = LookupBackend::strict();
        for (text, t) in &span_triples {
            table.insert("h", text, *t);
        }
        table.insert("h", "E1 E2 C1 C2", second[order[0]]);
        table.insert("h", "C1 C2 E1 E2", second[order[1]]);
        let gw = ScorerGateway::with_backend(Arc::new(table), GatewayConfig::default()).unwrap();
        verdicts.push(retrieve_and_rerank("h", &doc, &RerankConfig::default(), &gw).map_err(|e| e.to_string())?);
    }
    let avg = verdicts[0].rerank_triple.ok_or("no rerank triple")?;
    ensure(verdicts[0].rerank_triple == verdicts[1].rerank_triple, || "swap changed the average".into())?;
    ensure(verdicts[0].label == Label::Entailment && verdicts[1].label == Label::Entailment, || "label".into())?;
    ensure((avg.e - 0.7).abs() < 1e-12 && (avg.c - 0.15).abs() < 1e-12, || format!("average {avg:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10_000 {
        let (a, b) = (random_triple(&mut rng), random_triple(&mut rng));
        ensure(ScoreTriple::mean(&a, &b) == ScoreTriple::mean(&b, &a), || format!("mean({a:?}, {b:?}) not symmetric"))?;
    }

    // neutral first pass: no second scorer call
    let filler = Document::from_sentences("f", &["Alpha one.", "Beta two.", "Gamma three."]).unwrap();
    let gw = ScorerGateway::mock(0.0, 0);
    let v = retrieve_and_rerank("[F=1;P=+] claim", &filler, &RerankConfig::default(), &gw).map_err(|e| e.to_string())?;
    let stats = gw.stats();
    ensure(v.label == Label::Neutral && v.method == VerdictMethod::Predict && v.rerank_triple.is_none(), || {
        format!("{v:?}")
    })?;
    ensure(stats.backend_calls == 1 && stats.pairs_sent == 3, || format!("{stats:?}"))?;
    Ok("premises byte-exact; swapped averages identical; neutral gate made 1 call for 3 pairs".into())
}

fn t3(e: f64, n: f64, c: f64) -> ScoreTriple {
    ScoreTriple::new(e, n, c).unwrap()
}

fn determinism_under_parallelism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let planted: Vec<_> = (0..3)
        .map(|i| planted_cluster(&mut rng, &format!("t{i}"), PlantedClusterSpec::default()))
        .collect();
    let pairs: Vec<ScoreRequestPair> = planted[0]
        .cluster
        .documents()
        .iter()
        .flat_map(|d| d.spans())
        .enumerate()
        .map(|(i, s)| ScoreRequestPair::new(s.text.clone(), format!("[F={};P=-] premise {}", i % 4, i % 13)))
        .collect();
    let mut runs = Vec::new();
    for workers in [1, 2, 8] {
        let cfg = GatewayConfig {
            max_in_flight: workers,
            batch_size: 16,
            mock_jitter: 0.03,
            seed: 99,
            ..GatewayConfig::default()
        };
        let gw = ScorerGateway::from_config(cfg).map_err(|e| e.to_string())?;
        let batch = gw.score_batch(&pairs).map_err(|e| e.to_string())?;
        let rankings = planted
            .iter()
            .map(|p| rank_cluster(&p.cluster, ClusterMode::Discrepancy, Scope::AllDocs, &gw))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        runs.push((batch, rankings));
    }
    ensure(runs[0] == runs[1] && runs[0] == runs[2], || "outputs differ across worker counts".into())?;
    Ok(format!("{} pairs and 3 cluster rankings identical for 1, 2 and 8 workers", pairs.len()))
}

fn corruption_gates_and_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let vocab: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
    let sentence = |rng: &mut ChaCha8Rng| -> String {
        let n = rng.gen_range(5..10);
        let words: Vec<&str> = (0..n).map(|_| vocab.choose(rng).unwrap().as_str()).collect();
        format!("{}.", words.join(" "))
    };
    let mut clusters = Vec::new();
    let mut edits = Vec::new();
    for c in 0..40 {
        let docs: Vec<Document> = (0..3)
            .map(|d| {
                let sentences: Vec<String> = (0..6).map(|_| sentence(&mut rng)).collect();
                Document::from_sentences(format!("doc{d}"), &sentences).unwrap()
            })
            .collect();
        for e in 0..5 {
            let source = docs[0].spans()[rng.gen_range(0..6)].text.clone();
            let mut words: Vec<String> = source.trim_end_matches('.').split(' ').map(str::to_string).collect();
            for _ in 0..rng.gen_range(1..4) {
                let i = rng.gen_range(0..words.len());
                words[i] = format!("x{}", rng.gen_range(0..1000));
            }
            let edited = format!("{}.", words.join(" "));
            let (before, after) = match e % 3 {
                0 => (source, edited),
                1 => (edited, source),
                _ => (sentence(&mut rng), sentence(&mut rng)),
            };
            edits.push(EditPair::new(before, after, format!("c{c}e{e}")));
        }
        clusters.push(Cluster::new(format!("topic{c}"), docs).unwrap());
    }
    let cfg = JaccardConfig::default();
    let instances = build_corpus(&edits, &clusters, &TargetSelector::First, cfg);
    ensure(!instances.is_empty(), || "no instances".into())?;
    let by_claim: HashMap<&str, &EditPair> = edits.iter().map(|e| (e.claim_id.as_str(), e)).collect();
    let by_topic: HashMap<&str, &Cluster> = clusters.iter().map(|c| (c.topic(), c)).collect();
    for inst in &instances {
        let edit = by_claim[inst.provenance.claim_id.as_str()];
        let cluster = by_topic[inst.topic.as_str()];
        let doc = &cluster.documents()[cluster.document_index(&inst.doc_id).unwrap()];
        let current = match inst.provenance.replacement_side {
            EditSide::After => &edit.before,
            EditSide::Before => &edit.after,
        };
        ensure(jaccard(&edit.before, &edit.after, cfg) > 0.25, || format!("{} fails the edit gate", edit.claim_id))?;
        ensure(doc.spans()[inst.span_index].text == inst.original, || "original text mismatch".into())?;
        let sim = jaccard(&inst.original, &edit.before, cfg).max(jaccard(&inst.original, &edit.after, cfg));
        ensure(sim > 0.2, || format!("{} fails the match gate", edit.claim_id))?;
        ensure(jaccard(&inst.original, current, cfg) >= jaccard(&inst.original, &inst.replacement, cfg), || {
            format!("{}: replacement is the closer side", edit.claim_id)
        })?;

        let corrupted = inst.apply_to_cluster(cluster).map_err(|e| e.to_string())?;
        let idx = cluster.document_index(&inst.doc_id).unwrap();
        let restored = inst.revert(&corrupted.documents()[idx]).map_err(|e| e.to_string())?;
        ensure(corrupted.documents()[idx].text() != doc.text(), || "apply changed nothing".into())?;
        ensure(restored.text().as_bytes() == doc.text().as_bytes() && &restored == doc, || {
            format!("{}: revert is not byte-identical", edit.claim_id)
        })?;
    }
    Ok(format!("{} instances from {} edits re-satisfy both gates and revert byte-identically", instances.len(), edits.len()))
}

fn metric_fixtures() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    let e = |m: entailgine::metrics::MetricError| m.to_string();

    let perfect = f1_class(&["c", "e", "c"], &["c", "e", "c"], &"c").map_err(e)?;
    ensure(perfect.precision == 1.0 && perfect.recall == 1.0 && perfect.f1 == 1.0, || format!("{perfect:?}"))?;
    // TP 1, FP 1, FN 1
    let half = f1_class(&["c", "c", "e"], &["c", "e", "c"], &"c").map_err(e)?;
    ensure(close(half.precision, 0.5) && close(half.recall, 0.5) && close(half.f1, 0.5), || format!("{half:?}"))?;
    let none = f1_class(&["e", "e"], &["c", "e"], &"c").map_err(e)?;
    ensure(none.precision == 0.0 && none.recall == 0.0 && none.f1 == 0.0, || format!("{none:?}"))?;

    let first = precision_at_recall(&[(0.9, true), (0.8, true), (0.7, true), (0.6, true), (0.5, true), (0.4, false)], 0.8)
        .map_err(e)?;
    ensure(first == 1.0, || format!("positives first: {first}"))?;
    let scan = precision_at_recall(&[(0.9, true), (0.8, false), (0.7, true), (0.6, true), (0.5, false)], 0.8).map_err(e)?;
    ensure(close(scan, 0.75), || format!("P@R.8 = {scan}"))?;
    let tied = precision_at_recall(&[(0.5, true), (0.5, false), (0.5, false), (0.5, true), (0.5, false)], 0.8).map_err(e)?;
    ensure(close(tied, 0.4), || format!("all tied: {tied}"))?;

    let ranked = |order: &[usize], gold: usize| RankedInstance::new(order.to_vec(), gold).unwrap();
    let top = vec![ranked(&[3, 1, 2], 3), ranked(&[0, 2], 0)];
    ensure(accuracy_at_k(&top, 1).map_err(e)? == 1.0, || "gold at rank 1".into())?;
    let mixed = vec![ranked(&[1, 2, 3], 1), ranked(&[2, 1, 3], 1), ranked(&[3, 2, 1], 1)];
    let (a1, a2, a3) = (
        accuracy_at_k(&mixed, 1).map_err(e)?,
        accuracy_at_k(&mixed, 2).map_err(e)?,
        accuracy_at_k(&mixed, 3).map_err(e)?,
    );
    ensure(close(a1, 1.0 / 3.0) && close(a2, 2.0 / 3.0) && a3 == 1.0, || format!("A@K = {a1}, {a2}, {a3}"))?;

    let ba_perfect = balanced_accuracy(&[true, false, true], &[true, false, true]).map_err(e)?;
    let ba_always = balanced_accuracy(&[true; 4], &[true, false, true, false]).map_err(e)?;
    // recall 4/5 on positives, 3/5 on negatives
    let golds: Vec<bool> = (0..10).map(|i| i < 5).collect();
    let preds = [true, true, true, true, false, false, false, false, true, true];
    let ba_mixed = balanced_accuracy(&preds, &golds).map_err(e)?;
    ensure(ba_perfect == 1.0 && ba_always == 0.5 && close(ba_mixed, 0.7), || {
        format!("BA = {ba_perfect}, {ba_always}, {ba_mixed}")
    })?;
    Ok("F1, P@R.8, A@K and balanced accuracy fixtures match hand-computed values".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("planted-discrepancy recovery", planted_recovery),
        ("random baseline", random_baseline),
        ("binary-softmax identity", binary_softmax_identity),
        ("threshold tuning", tuning_matches_brute_force),
        ("rerank construction", rerank_construction),
        ("determinism under parallelism", determinism_under_parallelism),
        ("corruption builder", corruption_gates_and_round_trip),
        ("metric fixtures", metric_fixtures),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS [{}] {name}: {detail}", i + 1),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why}", i + 1);
            }
            Err(_) => {
                failed += 1;
                println!("FAIL [{}] {name}: panicked", i + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
