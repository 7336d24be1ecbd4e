//! Long-document and multi-document inference on top of a sentence-pair NLI
//! scorer.
//!
//! The crate is organized around a pluggable [`gateway::ScorerGateway`]:
//!
//! - [`segment`] turns documents into spans,
//! - [`inference`] retrieves evidence spans and decides a document-level
//!   verdict (retrieve-and-predict, retrieve-and-rerank),
//! - [`aggregation`] adapts three-way scores to binary decisions and
//!   combines multi-sentence hypotheses,
//! - [`cluster`] ranks the spans of a document cluster by how strongly the
//!   other documents contradict (or support) them,
//! - [`corruption`] plants realistic factual edits into clusters,
//! - [`metrics`] scores system output.
//!
//! Runnable walkthroughs live in this crate's `examples/` directory.

pub mod aggregation;
pub mod cli;
pub mod cluster;
pub mod config;
pub mod corpus;
pub mod corruption;
pub mod document;
pub mod gateway;
pub mod inference;
pub mod metrics;
pub mod nli;
pub mod segment;

pub use document::{Cluster, Document, Span, SpanRef};
pub use gateway::{GatewayConfig, ScoreRequestPair, ScorerGateway};
pub use nli::{normalize_scores, validate_triple, Label, RawScores, ScoreTriple};
