//! Deterministic planted-fact backend.
//!
//! Synthetic sentences carry a sentinel `[F=<id>;P=<+|->]`. Two sentences
//! about the same fact agree when their polarities match and contradict
//! otherwise; anything else is neutral. Optional jitter is derived from an
//! FNV-1a hash of the pair and the seed, so results are identical across
//! runs and platforms.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::Rng;

use super::{BackendError, ScoreBackend, ScoreRequestPair};
use crate::document::{Cluster, Document, SpanRef};
use crate::nli::ScoreTriple;

pub const AGREE: ScoreTriple = ScoreTriple { e: 0.85, n: 0.10, c: 0.05 };
pub const DISAGREE: ScoreTriple = ScoreTriple { e: 0.05, n: 0.10, c: 0.85 };
pub const UNRELATED: ScoreTriple = ScoreTriple { e: 0.03, n: 0.94, c: 0.03 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn flipped(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

/// A planted fact marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Sentinel {
    pub fact_id: u64,
    pub polarity: Polarity,
}

impl Sentinel {
    pub fn new(fact_id: u64, polarity: Polarity) -> Self {
        Self { fact_id, polarity }
    }

    /// First sentinel found in `text`. Accepts `-` and `−` (U+2212) for the
    /// negative polarity.
    pub fn parse(text: &str) -> Option<Sentinel> {
        let mut rest = text;
        while let Some(pos) = rest.find("[F=") {
            let candidate = &rest[pos + 3..];
            if let Some(s) = parse_body(candidate) {
                return Some(s);
            }
            rest = candidate;
        }
        None
    }
}

fn parse_body(s: &str) -> Option<Sentinel> {
    let close = s.find(']')?;
    let (id, pol) = s[..close].split_once(";P=")?;
    let fact_id = id.parse().ok()?;
    let polarity = match pol {
        "+" => Polarity::Positive,
        "-" | "\u{2212}" => Polarity::Negative,
        _ => return None,
    };
    Some(Sentinel { fact_id, polarity })
}

impl fmt::Display for Sentinel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.polarity {
            Polarity::Positive => '+',
            Polarity::Negative => '-',
        };
        write!(f, "[F={};P={}]", self.fact_id, p)
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash input: hypothesis bytes, 0xFF, premise bytes, 0xFF, seed (LE).
/// 0xFF never occurs in UTF-8, so the encoding is unambiguous.
fn pair_hash(pair: &ScoreRequestPair, seed: u64) -> u64 {
    let mut bytes = Vec::with_capacity(pair.hypothesis.len() + pair.premise.len() + 10);
    bytes.extend_from_slice(pair.hypothesis.as_bytes());
    bytes.push(0xFF);
    bytes.extend_from_slice(pair.premise.as_bytes());
    bytes.push(0xFF);
    bytes.extend_from_slice(&seed.to_le_bytes());
    fnv1a64(&bytes)
}

/// Scores one pair with the planted-fact rules.
pub fn mock_score(pair: &ScoreRequestPair, jitter: f64, seed: u64) -> ScoreTriple {
    let base = match (Sentinel::parse(&pair.hypothesis), Sentinel::parse(&pair.premise)) {
        (Some(h), Some(p)) if h.fact_id == p.fact_id => {
            if h.polarity == p.polarity {
                AGREE
            } else {
                DISAGREE
            }
        }
        _ => UNRELATED,
    };
    if jitter <= 0.0 {
        return base;
    }
    let mut state = pair_hash(pair, seed);
    let mut perturb = |v: f64| {
        let unit = (splitmix64(&mut state) >> 11) as f64 / (1u64 << 53) as f64;
        (v + (2.0 * unit - 1.0) * jitter).max(0.0)
    };
    let e = perturb(base.e);
    let n = perturb(base.n);
    let c = perturb(base.c);
    let sum = e + n + c;
    ScoreTriple {
        e: e / sum,
        n: n / sum,
        c: c / sum,
    }
}

/// [`ScoreBackend`] wrapper around [`mock_score`] with a call counter.
#[derive(Debug, Default)]
pub struct MockBackend {
    jitter: f64,
    seed: u64,
    calls: AtomicU64,
}

impl MockBackend {
    pub fn new(jitter: f64, seed: u64) -> Self {
        Self {
            jitter,
            seed,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl ScoreBackend for MockBackend {
    fn score_pairs(&self, pairs: &[ScoreRequestPair]) -> Result<Vec<ScoreTriple>, BackendError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(pairs.iter().map(|p| mock_score(p, self.jitter, self.seed)).collect())
    }

    fn name(&self) -> &str {
        "mock"
    }
}

/// Backend answering from a table of `(hypothesis, premise)` texts, with a
/// fallback triple for pairs not in the table.
#[derive(Debug, Clone)]
pub struct LookupBackend {
    table: HashMap<(String, String), ScoreTriple>,
    fallback: Option<ScoreTriple>,
}

impl LookupBackend {
    pub fn new(fallback: ScoreTriple) -> Self {
        Self {
            table: HashMap::new(),
            fallback: Some(fallback),
        }
    }

    /// A table without fallback: unknown pairs are a backend error.
    pub fn strict() -> Self {
        Self {
            table: HashMap::new(),
            fallback: None,
        }
    }

    pub fn insert(&mut self, hypothesis: &str, premise: &str, triple: ScoreTriple) {
        self.table.insert((hypothesis.to_string(), premise.to_string()), triple);
    }
}

impl ScoreBackend for LookupBackend {
    fn score_pairs(&self, pairs: &[ScoreRequestPair]) -> Result<Vec<ScoreTriple>, BackendError> {
        pairs
            .iter()
            .map(|p| {
                self.table
                    .get(&(p.hypothesis.clone(), p.premise.clone()))
                    .copied()
                    .or(self.fallback)
                    .ok_or_else(|| {
                        BackendError::Malformed(format!("no score for ({:?}, {:?})", p.hypothesis, p.premise))
                    })
            })
            .collect()
    }

    fn name(&self) -> &str {
        "lookup"
    }
}

/// Shape of a synthetic planted-discrepancy cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlantedClusterSpec {
    pub documents: usize,
    pub spans_per_doc: usize,
    /// Number of facts every document states (positive polarity).
    pub shared_facts: usize,
}

impl Default for PlantedClusterSpec {
    fn default() -> Self {
        Self {
            documents: 11,
            spans_per_doc: 8,
            shared_facts: 4,
        }
    }
}

/// A generated cluster with the location of its single flipped fact.
#[derive(Debug, Clone)]
pub struct PlantedCluster {
    pub cluster: Cluster,
    pub corrupted: SpanRef,
}

/// Generates a cluster in which every document states the same facts
/// positively, except one span of one document whose polarity is flipped.
/// Remaining spans are unrelated filler.
pub fn planted_cluster<R: Rng>(rng: &mut R, topic: &str, spec: PlantedClusterSpec) -> PlantedCluster {
    assert!(spec.documents >= 2, "a cluster needs at least two documents");
    assert!(
        spec.shared_facts >= 1 && spec.shared_facts <= spec.spans_per_doc,
        "facts must fit in each document"
    );
    let target_doc = rng.gen_range(0..spec.documents);
    let target_fact = rng.gen_range(0..spec.shared_facts) as u64;
    let mut corrupted = SpanRef::new(target_doc, 0);
    let mut documents = Vec::with_capacity(spec.documents);
    for d in 0..spec.documents {
        let mut slots: Vec<Option<u64>> = (0..spec.shared_facts as u64).map(Some).collect();
        slots.resize(spec.spans_per_doc, None);
        slots.shuffle(rng);
        let sentences: Vec<String> = slots
            .iter()
            .enumerate()
            .map(|(s, slot)| match slot {
                Some(fact) => {
                    let polarity = if d == target_doc && *fact == target_fact {
                        corrupted = SpanRef::new(d, s);
                        Polarity::Negative
                    } else {
                        Polarity::Positive
                    };
                    format!("{} Doc {d} states fact {fact}.", Sentinel::new(*fact, polarity))
                }
                None => format!("Doc {d} filler sentence {s} about {topic}."),
            })
            .collect();
        documents.push(Document::from_sentences(format!("doc{d}"), &sentences).expect("non-blank sentences"));
    }
    PlantedCluster {
        cluster: Cluster::new(topic, documents).expect("unique ids"),
        corrupted,
    }
}
