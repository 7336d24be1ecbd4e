//! The scoring boundary between the engine and an NLI model.
//!
//! [`ScorerGateway`] accepts ordered lists of hypothesis/premise pairs,
//! removes duplicates, consults its cache, splits the remainder into
//! batches and sends up to `max_in_flight` batches to the backend at once.
//! Output order always matches input order.

pub mod mock;
pub mod remote;

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use log::warn;
use lru::LruCache;
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nli::{validate_triple, ScoreError, ScoreTriple};

pub use mock::MockBackend;
pub use remote::RemoteBackend;

/// Environment variable that overrides the configured remote endpoint.
pub const SCORER_URL_ENV: &str = "ENTAILGINE_SCORER_URL";

/// Upper bound for mock jitter; keeps every mock argmax stable.
pub const MAX_MOCK_JITTER: f64 = 0.03;

/// A single NLI problem: does `premise` entail `hypothesis`?
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScoreRequestPair {
    pub hypothesis: String,
    pub premise: String,
}

impl ScoreRequestPair {
    pub fn new(hypothesis: impl Into<String>, premise: impl Into<String>) -> Self {
        Self {
            hypothesis: hypothesis.into(),
            premise: premise.into(),
        }
    }

    pub fn is_valid(&self) -> bool {
        !self.hypothesis.trim().is_empty() && !self.premise.trim().is_empty()
    }
}

/// The literal model input for a pair: `entailment: <hyp> [SEP] <prem>`.
///
/// Remote backends receive the raw texts and are expected to build this
/// string themselves.
pub fn format_input(pair: &ScoreRequestPair) -> String {
    if pair.hypothesis.contains("[SEP]") || pair.premise.contains("[SEP]") {
        warn!("pair text contains a literal [SEP]; formatted verbatim");
    }
    format!("entailment: {} [SEP] {}", pair.hypothesis, pair.premise)
}

/// Errors a backend may report for one call.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("HTTP status {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response body: {0}")]
    Malformed(String),
    #[error("expected {expected} scores, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid score at position {index}: {source}")]
    InvalidTriple { index: usize, source: ScoreError },
}

impl BackendError {
    /// Whether a retry could plausibly succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            BackendError::Transport(_) => true,
            BackendError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatewayError {
    #[error("empty request")]
    EmptyRequest,
    #[error("pair {index} has an empty hypothesis or premise")]
    InvalidPair { index: usize },
    #[error("backend failed after {attempts} attempts on pairs {pair_indices:?}: {source}")]
    Batch {
        pair_indices: Vec<usize>,
        attempts: usize,
        source: BackendError,
    },
    #[error("protocol violation on pairs {pair_indices:?}: {source}")]
    Protocol {
        pair_indices: Vec<usize>,
        source: BackendError,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// A scoring backend. Implementations return one triple per input pair, in
/// order.
pub trait ScoreBackend: Send + Sync {
    fn score_pairs(&self, pairs: &[ScoreRequestPair]) -> Result<Vec<ScoreTriple>, BackendError>;

    fn name(&self) -> &str;
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Remote { endpoint: String },
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    pub backend: BackendKind,
    pub batch_size: usize,
    pub max_in_flight: usize,
    /// Number of cached pair results; 0 disables the cache.
    pub cache_capacity: usize,
    pub mock_jitter: f64,
    pub seed: u64,
    pub max_retries: usize,
    pub initial_backoff_ms: u64,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Mock,
            batch_size: 32,
            max_in_flight: 4,
            cache_capacity: 1_000_000,
            mock_jitter: 0.0,
            seed: 0,
            max_retries: 3,
            initial_backoff_ms: 100,
        }
    }
}

impl GatewayConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.batch_size == 0 {
            return Err(GatewayError::Config("batch_size must be at least 1".into()));
        }
        if self.max_in_flight == 0 {
            return Err(GatewayError::Config("max_in_flight must be at least 1".into()));
        }
        if !(0.0..=MAX_MOCK_JITTER).contains(&self.mock_jitter) {
            return Err(GatewayError::Config(format!(
                "mock_jitter must lie in [0, {MAX_MOCK_JITTER}]"
            )));
        }
        Ok(())
    }
}

/// Counters describing the backend traffic a gateway generated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GatewayStats {
    pub backend_calls: u64,
    pub pairs_sent: u64,
    pub cache_hits: u64,
}

#[derive(Default)]
struct Counters {
    backend_calls: AtomicU64,
    pairs_sent: AtomicU64,
    cache_hits: AtomicU64,
}

type CacheKey = (String, String);

pub struct ScorerGateway {
    backend: Arc<dyn ScoreBackend>,
    cfg: GatewayConfig,
    cache: Option<Mutex<LruCache<CacheKey, ScoreTriple>>>,
    counters: Counters,
}

impl std::fmt::Debug for ScorerGateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScorerGateway")
            .field("backend", &self.backend.name())
            .field("cfg", &self.cfg)
            .finish()
    }
}

impl ScorerGateway {
    /// Builds the backend named by `cfg.backend`. For the remote backend,
    /// `ENTAILGINE_SCORER_URL` takes precedence over the configured endpoint.
    pub fn from_config(cfg: GatewayConfig) -> Result<Self, GatewayError> {
        cfg.validate()?;
        let backend: Arc<dyn ScoreBackend> = match &cfg.backend {
            BackendKind::Mock => Arc::new(MockBackend::new(cfg.mock_jitter, cfg.seed)),
            BackendKind::Remote { endpoint } => Arc::new(RemoteBackend::from_env_or(endpoint)),
        };
        Self::with_backend(backend, cfg)
    }

    pub fn with_backend(backend: Arc<dyn ScoreBackend>, cfg: GatewayConfig) -> Result<Self, GatewayError> {
        cfg.validate()?;
        let cache = NonZeroUsize::new(cfg.cache_capacity).map(|cap| Mutex::new(LruCache::new(cap)));
        Ok(Self {
            backend,
            cfg,
            cache,
            counters: Counters::default(),
        })
    }

    /// Mock-backed gateway with default batching.
    pub fn mock(jitter: f64, seed: u64) -> Self {
        let cfg = GatewayConfig {
            mock_jitter: jitter,
            seed,
            ..GatewayConfig::default()
        };
        Self::from_config(cfg).expect("valid mock configuration")
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.cfg
    }

    pub fn backend(&self) -> &Arc<dyn ScoreBackend> {
        &self.backend
    }

    pub fn stats(&self) -> GatewayStats {
        GatewayStats {
            backend_calls: self.counters.backend_calls.load(Ordering::Relaxed),
            pairs_sent: self.counters.pairs_sent.load(Ordering::Relaxed),
            cache_hits: self.counters.cache_hits.load(Ordering::Relaxed),
        }
    }

    pub fn score_one(&self, hypothesis: &str, premise: &str) -> Result<ScoreTriple, GatewayError> {
        let pair = ScoreRequestPair::new(hypothesis, premise);
        Ok(self.score_batch(std::slice::from_ref(&pair))?[0])
    }

    /// Scores `pairs`, returning one validated triple per pair in input order.
    pub fn score_batch(&self, pairs: &[ScoreRequestPair]) -> Result<Vec<ScoreTriple>, GatewayError> {
        if pairs.is_empty() {
            return Err(GatewayError::EmptyRequest);
        }
        if let Some(index) = pairs.iter().position(|p| !p.is_valid()) {
            return Err(GatewayError::InvalidPair { index });
        }

        // unique pair -> every input position holding it
        let mut unique: Vec<&ScoreRequestPair> = Vec::new();
        let mut positions: Vec<Vec<usize>> = Vec::new();
        let mut seen: HashMap<&ScoreRequestPair, usize> = HashMap::new();
        for (i, pair) in pairs.iter().enumerate() {
            let slot = *seen.entry(pair).or_insert_with(|| {
                unique.push(pair);
                positions.push(Vec::new());
                unique.len() - 1
            });
            positions[slot].push(i);
        }

        let mut results: Vec<Option<ScoreTriple>> = vec![None; unique.len()];
        let mut missing: Vec<usize> = Vec::new();
        match &self.cache {
            Some(cache) => {
                let mut cache = cache.lock();
                for (u, pair) in unique.iter().enumerate() {
                    let key = (pair.hypothesis.clone(), pair.premise.clone());
                    match cache.get(&key) {
                        Some(hit) => {
                            results[u] = Some(*hit);
                            self.counters.cache_hits.fetch_add(1, Ordering::Relaxed);
                        }
                        None => missing.push(u),
                    }
                }
            }
            None => missing.extend(0..unique.len()),
        }

        if !missing.is_empty() {
            let chunks: Vec<&[usize]> = missing.chunks(self.cfg.batch_size).collect();
            let outcomes = self.run_chunks(&unique, &chunks);
            let mut failure: Option<(Vec<usize>, usize, BackendError)> = None;
            for (chunk, outcome) in chunks.iter().zip(outcomes) {
                match outcome {
                    Ok(triples) => {
                        for (&u, t) in chunk.iter().zip(triples) {
                            results[u] = Some(t);
                        }
                    }
                    Err((attempts, err)) => {
                        let entry = failure.get_or_insert_with(|| (Vec::new(), attempts, err));
                        entry.0.extend(chunk.iter().flat_map(|&u| positions[u].iter().copied()));
                    }
                }
            }
            if let Some((mut pair_indices, attempts, source)) = failure {
                pair_indices.sort_unstable();
                return Err(if source.is_transient() || matches!(source, BackendError::Http { .. }) {
                    GatewayError::Batch {
                        pair_indices,
                        attempts,
                        source,
                    }
                } else {
                    GatewayError::Protocol {
                        pair_indices,
                        source,
                    }
                });
            }
            if let Some(cache) = &self.cache {
                let mut cache = cache.lock();
                for &u in &missing {
                    let pair = unique[u];
                    cache.put(
                        (pair.hypothesis.clone(), pair.premise.clone()),
                        results[u].expect("scored"),
                    );
                }
            }
        }

        let mut out = vec![ScoreTriple { e: 0.0, n: 0.0, c: 0.0 }; pairs.len()];
        for (u, slots) in positions.iter().enumerate() {
            let triple = results[u].expect("every unique pair is scored");
            for &i in slots {
                out[i] = triple;
            }
        }
        Ok(out)
    }

    fn run_chunks(
        &self,
        unique: &[&ScoreRequestPair],
        chunks: &[&[usize]],
    ) -> Vec<Result<Vec<ScoreTriple>, (usize, BackendError)>> {
        let workers = self.cfg.max_in_flight.min(chunks.len());
        if workers <= 1 {
            return chunks.iter().map(|c| self.call_with_retry(unique, c)).collect();
        }
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<_>>> = chunks.iter().map(|_| Mutex::new(None)).collect();
        thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= chunks.len() {
                        break;
                    }
                    let outcome = self.call_with_retry(unique, chunks[i]);
                    *slots[i].lock() = Some(outcome);
                });
            }
        });
        slots
            .into_iter()
            .map(|s| s.into_inner().expect("every chunk ran"))
            .collect()
    }

    fn call_with_retry(
        &self,
        unique: &[&ScoreRequestPair],
        chunk: &[usize],
    ) -> Result<Vec<ScoreTriple>, (usize, BackendError)> {
        let batch: Vec<ScoreRequestPair> = chunk.iter().map(|&u| unique[u].clone()).collect();
        let mut backoff = Duration::from_millis(self.cfg.initial_backoff_ms);
        let mut attempt = 0;
        loop {
            attempt += 1;
            self.counters.backend_calls.fetch_add(1, Ordering::Relaxed);
            self.counters
                .pairs_sent
                .fetch_add(batch.len() as u64, Ordering::Relaxed);
            let err = match self.backend.score_pairs(&batch) {
                Ok(triples) => match check_response(&batch, triples) {
                    Ok(triples) => return Ok(triples),
                    Err(e) => e,
                },
                Err(e) => e,
            };
            if !err.is_transient() || attempt > self.cfg.max_retries {
                return Err((attempt, err));
            }
            warn!(
                "backend '{}' failed (attempt {attempt}): {err}; retrying in {backoff:?}",
                self.backend.name()
            );
            thread::sleep(backoff);
            backoff *= 2;
        }
    }
}

fn check_response(
    batch: &[ScoreRequestPair],
    triples: Vec<ScoreTriple>,
) -> Result<Vec<ScoreTriple>, BackendError> {
    if triples.len() != batch.len() {
        return Err(BackendError::LengthMismatch {
            expected: batch.len(),
            got: triples.len(),
        });
    }
    triples
        .into_iter()
        .enumerate()
        .map(|(index, t)| validate_triple(t).map_err(|source| BackendError::InvalidTriple { index, source }))
        .collect()
}
