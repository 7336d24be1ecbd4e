//! Command-line surface. The `entailgine` binary is a thin shell around
//! [`run`].
//!
//! Exit codes: 0 on success, 2 on any failure.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::{tune_threshold, AggregationError, BinaryMethodKind, TuneObjective};
use crate::cluster::{rank_cluster, ClusterError, ClusterMode, Scope};
use crate::config::{ConfigError, EngineConfig};
use crate::corpus::{self, CorpusError, DocumentRecord, GoldRecord, PredictionRecord};
use crate::corruption::{build_corpus, JaccardConfig, TargetSelector};
use crate::document::{Cluster, Document, DocumentError};
use crate::gateway::{BackendKind, GatewayError, ScorerGateway};
use crate::inference::{retrieve_and_predict, retrieve_and_rerank, score_spans, DocVerdict, InferenceError, VerdictMethod};
use crate::metrics::{self, MetricError, RankedInstance};
use crate::nli::{Label, ScoreTriple};
use crate::segment::{segment, SegmenterConfig};

pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Aggregation(#[from] AggregationError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(name = "entailgine", version, about = "Document-level NLI over a sentence-pair scorer")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random component (mock jitter included).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendArg>,
    /// Scorer service base URL; implies the remote backend.
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    /// Mock score jitter, at most 0.03.
    #[arg(long, global = true)]
    pub jitter: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Mock,
    Remote,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a document against a hypothesis.
    Classify(ClassifyArgs),
    /// Rank cluster spans by discrepancy or consensus.
    RankCluster(RankClusterArgs),
    /// Plant edit pairs into cluster documents.
    BuildCorruptions(BuildCorruptionsArgs),
    /// Tune a binary decision threshold on scored examples.
    Tune(TuneArgs),
    /// Score predictions against golds.
    Eval(EvalArgs),
    /// Score a single hypothesis/premise pair.
    ScorePair(ScorePairArgs),
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub hypothesis: String,
    /// A document record (JSON) or plain text to segment.
    #[arg(long)]
    pub doc: PathBuf,
    #[arg(long)]
    pub rerank: bool,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Discrepancy,
    Consensus,
    Reversed,
}

impl From<ModeArg> for ClusterMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Discrepancy => ClusterMode::Discrepancy,
            ModeArg::Consensus => ClusterMode::Consensus,
            ModeArg::Reversed => ClusterMode::Reversed,
        }
    }
}

#[derive(Debug, Args)]
pub struct RankClusterArgs {
    /// Cluster records, one per line; each is ranked.
    #[arg(long)]
    pub cluster: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Only rank spans of this document.
    #[arg(long)]
    pub scope: Option<String>,
    #[arg(long)]
    pub top: Option<usize>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct BuildCorruptionsArgs {
    #[arg(long)]
    pub edits: PathBuf,
    #[arg(long)]
    pub clusters: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Id of the document to corrupt; the first document by default.
    #[arg(long)]
    pub target: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    EntailThreshold,
    ContraThreshold,
    BinarySoftmax,
}

impl From<MethodArg> for BinaryMethodKind {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::EntailThreshold => BinaryMethodKind::EntailThreshold,
            MethodArg::ContraThreshold => BinaryMethodKind::ContraThreshold,
            MethodArg::BinarySoftmax => BinaryMethodKind::BinarySoftmax,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    F1Entail,
    BalancedAccuracy,
}

impl From<ObjectiveArg> for TuneObjective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::F1Entail => TuneObjective::F1Entail,
            ObjectiveArg::BalancedAccuracy => TuneObjective::BalancedAccuracy,
        }
    }
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub scored: PathBuf,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value = "f1-entail")]
    pub objective: ObjectiveArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    F1,
    MacroF1,
    BalancedAccuracy,
    PrecisionAtRecall,
    AccuracyAtK,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_enum)]
    pub metric: MetricArg,
    /// Positive class for f1, balanced-accuracy and precision-at-recall.
    #[arg(long)]
    pub class: Option<String>,
    /// Classes averaged by macro-f1.
    #[arg(long, value_delimiter = ',', default_values_t = ["e".to_string(), "c".to_string()])]
    pub classes: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 0.8)]
    pub r: f64,
}

#[derive(Debug, Args)]
pub struct ScorePairArgs {
    #[arg(long)]
    pub hypothesis: String,
    #[arg(long)]
    pub premise: String,
}

/// Evidence span as printed in a classify report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSpan {
    pub span_index: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyEvidence {
    pub entailment: EvidenceSpan,
    pub contradiction: EvidenceSpan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub doc_id: String,
    pub hypothesis: String,
    pub label: Label,
    pub threshold: f64,
    /// Per-label maxima over spans.
    pub scores: ScoreTriple,
    pub evidence: ClassifyEvidence,
    pub method: VerdictMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rerank_scores: Option<ScoreTriple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rerank_premises: Option<[String; 2]>,
}

impl ClassifyReport {
    fn new(doc: &Document, hypothesis: &str, threshold: f64, v: DocVerdict) -> Self {
        let evidence = |i: usize| EvidenceSpan {
            span_index: i,
            text: doc.spans()[i].text.clone(),
        };
        Self {
            doc_id: doc.id().to_string(),
            hypothesis: hypothesis.to_string(),
            label: v.label,
            threshold,
            scores: ScoreTriple {
                e: v.max_scores.e,
                n: v.max_scores.n,
                c: v.max_scores.c,
            },
            evidence: ClassifyEvidence {
                entailment: evidence(v.evidence.entailment),
                contradiction: evidence(v.evidence.contradiction),
            },
            method: v.method,
            rerank_scores: v.rerank_triple,
            rerank_premises: v.rerank_premises.map(|p| [p.entail_first, p.contra_first]),
        }
    }

    fn write_text(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "label: {}", self.label)?;
        writeln!(out, "scores: e={:.4} n={:.4} c={:.4}", self.scores.e, self.scores.n, self.scores.c)?;
        let ev = &self.evidence;
        writeln!(out, "entailment evidence [{}]: {}", ev.entailment.span_index, ev.entailment.text)?;
        writeln!(out, "contradiction evidence [{}]: {}", ev.contradiction.span_index, ev.contradiction.text)?;
        if let Some(r) = &self.rerank_scores {
            writeln!(out, "rerank scores: e={:.4} n={:.4} c={:.4}", r.e, r.n, r.c)?;
        }
        if let Some([a, b]) = &self.rerank_premises {
            writeln!(out, "premise A: {a}")?;
            writeln!(out, "premise B: {b}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedSpan {
    pub doc_id: String,
    pub span_index: usize,
    pub text: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub rank: usize,
    pub doc_id: String,
    pub span_index: usize,
    pub text: String,
    pub omega: f64,
    pub alignments: Vec<AlignedSpan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub topic: String,
    pub mode: ClusterMode,
    pub entries: Vec<RankedEntry>,
}

impl ClusterReport {
    fn write_text(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let mode = serde_json::to_value(self.mode).map_err(std::io::Error::other)?;
        writeln!(out, "# {} ({})", self.topic, mode.as_str().unwrap_or_default())?;
        for e in &self.entries {
            writeln!(out, "{}. [{} #{}] omega={:.4} {}", e.rank, e.doc_id, e.span_index, e.omega, e.text)?;
            for a in &e.alignments {
                writeln!(out, "     {} #{} ({:.4}) {}", a.doc_id, a.span_index, a.score, a.text)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub method: BinaryMethodKind,
    pub objective: TuneObjective,
    pub threshold: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: String,
    pub value: f64,
    pub instances: usize,
}

/// Applies configuration file and global flags, in that order.
pub fn resolve_config(global: &GlobalArgs) -> Result<EngineConfig, CliError> {
    let mut cfg = match &global.config {
        Some(path) => EngineConfig::load(path)?,
        None => EngineConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if let Some(j) = global.jitter {
        cfg.gateway.mock_jitter = j;
    }
    match (global.backend, &global.endpoint) {
        (Some(BackendArg::Mock), Some(_)) => {
            return Err(CliError::Usage("--endpoint requires the remote backend".into()))
        }
        (Some(BackendArg::Mock), None) => cfg.gateway.backend = BackendKind::Mock,
        (_, Some(endpoint)) => {
            cfg.gateway.backend = BackendKind::Remote {
                endpoint: endpoint.clone(),
            }
        }
        (Some(BackendArg::Remote), None) => {
            if cfg.gateway.backend == BackendKind::Mock {
                let endpoint = std::env::var(crate::gateway::SCORER_URL_ENV).map_err(|_| {
                    CliError::Usage(format!(
                        "remote backend needs --endpoint or {}",
                        crate::gateway::SCORER_URL_ENV
                    ))
                })?;
                cfg.gateway.backend = BackendKind::Remote { endpoint };
            }
        }
        (None, None) => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a classify input: a JSON document record, or plain text that is
/// segmented with default settings.
pub fn load_document(path: &Path) -> Result<Document, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if text.trim_start().starts_with('{') {
        let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or_default();
        let record: DocumentRecord = serde_json::from_str(first).map_err(|source| CorpusError::Json { line: 1, source })?;
        return Ok(record.into_document()?);
    }
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let doc = segment(&id, &text, &SegmenterConfig::default());
    if doc.is_empty() {
        return Err(DocumentError::Empty.into());
    }
    Ok(doc)
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer(&mut *out, value).map_err(std::io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    execute(cli, out)
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = resolve_config(&cli.global)?;
    match cli.command {
        Command::Classify(a) => classify(&cfg, a, out),
        Command::RankCluster(a) => rank_clusters(&cfg, a, out),
        Command::BuildCorruptions(a) => build_corruptions(a, out),
        Command::Tune(a) => tune(a, out),
        Command::Eval(a) => eval(a, out),
        Command::ScorePair(a) => {
            let gw = ScorerGateway::from_config(cfg.gateway_config())?;
            let triple = gw.score_one(&a.hypothesis, &a.premise)?;
            emit_json(out, &triple)
        }
    }
}

fn classify(cfg: &EngineConfig, a: ClassifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let doc = load_document(&a.doc)?;
    let gw = ScorerGateway::from_config(cfg.gateway_config())?;
    let mut rerank = cfg.rerank_config();
    if let Some(t) = a.t {
        rerank.threshold = t;
    }
    if let Some(k) = a.k {
        rerank.k = k;
    }
    let verdict = if a.rerank {
        retrieve_and_rerank(&a.hypothesis, &doc, &rerank, &gw)?
    } else {
        retrieve_and_predict(&score_spans(&a.hypothesis, &doc, &gw)?, rerank.threshold)?
    };
    let report = ClassifyReport::new(&doc, &a.hypothesis, rerank.threshold, verdict);
    if a.json {
        emit_json(out, &report)
    } else {
        Ok(report.write_text(out)?)
    }
}

fn cluster_report(cluster: &Cluster, ranking: crate::cluster::ClusterRanking, top: Option<usize>) -> ClusterReport {
    let docs = cluster.documents();
    let text_of = |r: crate::SpanRef| cluster.span(r).map(|s| s.text.clone()).unwrap_or_default();
    let entries = ranking
        .entries
        .iter()
        .take(top.unwrap_or(usize::MAX))
        .enumerate()
        .map(|(i, e)| RankedEntry {
            rank: i + 1,
            doc_id: docs[e.span.doc_index].id().to_string(),
            span_index: e.span.span_index,
            text: text_of(e.span),
            omega: e.omega,
            alignments: e
                .per_doc_best
                .iter()
                .map(|al| AlignedSpan {
                    doc_id: al.doc_id.clone(),
                    span_index: al.span.span_index,
                    text: text_of(al.span),
                    score: al.score,
                })
                .collect(),
        })
        .collect();
    ClusterReport {
        topic: ranking.topic,
        mode: ranking.mode,
        entries,
    }
}

fn rank_clusters(cfg: &EngineConfig, a: RankClusterArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let clusters = corpus::read_clusters(&a.cluster)?;
    let gw = ScorerGateway::from_config(cfg.gateway_config())?;
    let mode = a.mode.map(ClusterMode::from).unwrap_or(cfg.cluster.mode);
    let scope_id = a.scope.or_else(|| cfg.cluster.scope.clone());
    for cluster in &clusters {
        let scope = match &scope_id {
            None => Scope::AllDocs,
            Some(id) => Scope::SingleDoc(cluster.document_index(id).ok_or_else(|| {
                CliError::Usage(format!("document '{id}' is not in cluster '{}'", cluster.topic()))
            })?),
        };
        let ranking = rank_cluster(cluster, mode, scope, &gw)?;
        let report = cluster_report(cluster, ranking, a.top);
        if a.json {
            emit_json(out, &report)?;
        } else {
            report.write_text(out)?;
        }
    }
    Ok(())
}

fn build_corruptions(a: BuildCorruptionsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let edits = corpus::read_edits(&a.edits)?;
    let clusters = corpus::read_clusters(&a.clusters)?;
    let selector = a.target.map_or(TargetSelector::First, TargetSelector::ById);
    let instances = build_corpus(&edits, &clusters, &selector, JaccardConfig::default());
    corpus::write_records_to(&a.out, &instances)?;
    writeln!(out, "{} corruption instances written to {}", instances.len(), a.out.display())?;
    Ok(())
}

fn tune(a: TuneArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let scored = corpus::read_scored(&a.scored)?;
    let kind = BinaryMethodKind::from(a.method);
    let objective = TuneObjective::from(a.objective);
    let (threshold, value) = tune_threshold(&scored, kind, objective)?;
    emit_json(
        out,
        &TuneReport {
            method: kind,
            objective,
            threshold,
            value,
        },
    )
}

/// Pairs every gold record with the prediction of the same id.
fn join<'a>(
    preds: &'a [(usize, PredictionRecord)],
    golds: &'a [(usize, GoldRecord)],
) -> Result<Vec<(&'a PredictionRecord, &'a GoldRecord)>, CliError> {
    let mut by_id: HashMap<&str, &PredictionRecord> = HashMap::new();
    for (line, p) in preds {
        if by_id.insert(p.id.as_str(), p).is_some() {
            return Err(CliError::Usage(format!("prediction line {line}: duplicate id '{}'", p.id)));
        }
    }
    golds
        .iter()
        .map(|(line, g)| {
            by_id
                .get(g.id.as_str())
                .map(|p| (*p, g))
                .ok_or_else(|| CliError::Usage(format!("gold line {line}: no prediction for id '{}'", g.id)))
        })
        .collect()
}

fn field<'a, T>(p: &'a PredictionRecord, value: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    value
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("prediction '{}' has no {name}", p.id)))
}

fn eval(a: EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let preds: Vec<(usize, PredictionRecord)> = corpus::read_records(&a.pred)?;
    let golds: Vec<(usize, GoldRecord)> = corpus::read_records(&a.gold)?;
    let pairs = join(&preds, &golds)?;
    let labels = || -> Result<(Vec<&str>, Vec<&str>), CliError> {
        let mut p = Vec::with_capacity(pairs.len());
        for (pred, _) in &pairs {
            p.push(field(pred, &pred.label, "label")?.as_str());
        }
        Ok((p, pairs.iter().map(|(_, g)| g.label.as_str()).collect()))
    };
    let (name, value) = match a.metric {
        MetricArg::F1 => {
            let class = a.class.unwrap_or_else(|| "c".into());
            let (p, g) = labels()?;
            (format!("f1:{class}"), metrics::f1_class(&p, &g, &class.as_str())?.f1)
        }
        MetricArg::MacroF1 => {
            let (p, g) = labels()?;
            let classes: Vec<&str> = a.classes.iter().map(String::as_str).collect();
            ("macro-f1".to_string(), metrics::macro_f1(&p, &g, &classes)?)
        }
        MetricArg::BalancedAccuracy => {
            let class = a.class.unwrap_or_else(|| "e".into());
            let (p, g) = labels()?;
            let pb: Vec<bool> = p.iter().map(|l| *l == class).collect();
            let gb: Vec<bool> = g.iter().map(|l| *l == class).collect();
            ("balanced-accuracy".to_string(), metrics::balanced_accuracy(&pb, &gb)?)
        }
        MetricArg::PrecisionAtRecall => {
            let class = a.class.unwrap_or_else(|| "c".into());
            let mut scored = Vec::with_capacity(pairs.len());
            for (p, g) in &pairs {
                scored.push((*field(p, &p.score, "score")?, g.label == class));
            }
            (format!("precision-at-recall:{}", a.r), metrics::precision_at_recall(&scored, a.r)?)
        }
        MetricArg::AccuracyAtK => {
            let mut instances = Vec::with_capacity(pairs.len());
            for (p, g) in &pairs {
                let ranking = field(p, &p.ranking, "ranking")?.clone();
                instances.push(RankedInstance::new(ranking, g.label.clone())?);
            }
            (format!("accuracy-at-{}", a.k), metrics::accuracy_at_k(&instances, a.k)?)
        }
    };
    emit_json(
        out,
        &EvalReport {
            metric: name,
            value,
            instances: pairs.len(),
        },
    )
}

/// Runs the CLI with process arguments, printing errors to stderr.
/// Returns the process exit code.
pub fn main_entry() -> i32 {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match Cli::try_parse() {
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            0
        }
        Err(e) => {
            let _ = e.print();
            EXIT_FAILURE
        }
        Ok(cli) => match execute(cli, &mut lock) {
            Ok(()) => 0,
            Err(e) => {
                let _ = lock.flush();
                eprintln!("error: {e}");
                EXIT_FAILURE
            }
        },
    }
}
