//! Line-delimited JSON record formats.
//!
//! Every file is UTF-8 with one JSON object per line; blank lines are
//! skipped. Formats:
//!
//! - document: `{"id": str, "sentences": [str]}`
//! - cluster: `{"topic": str, "documents": [document]}`
//! - edit: `{"before": str, "after": str, "claim_id": str}`
//! - scored example: `{"e": f, "n": f, "c": f, "gold": bool}`
//! - prediction: `{"id": str, "label"?: str, "score"?: f, "ranking"?: [str]}`
//! - gold: `{"id": str, "label": str}`

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corruption::{CorruptionInstance, EditPair};
use crate::document::{Cluster, Document, DocumentError};
use crate::nli::{ScoreError, ScoreTriple};
use crate::segment::ingest_presegmented;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {source}")]
    Document {
        line: usize,
        #[source]
        source: DocumentError,
    },
    #[error("line {line}: {source}")]
    Score {
        line: usize,
        #[source]
        source: ScoreError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentRecord {
    pub id: String,
    pub sentences: Vec<String>,
}

impl DocumentRecord {
    pub fn into_document(self) -> Result<Document, DocumentError> {
        ingest_presegmented(&self.id, &self.sentences)
    }
}

impl From<&Document> for DocumentRecord {
    fn from(doc: &Document) -> Self {
        Self {
            id: doc.id().to_string(),
            sentences: doc.sentences().map(str::to_string).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterRecord {
    pub topic: String,
    pub documents: Vec<DocumentRecord>,
}

impl ClusterRecord {
    pub fn into_cluster(self) -> Result<Cluster, DocumentError> {
        let docs = self
            .documents
            .into_iter()
            .map(DocumentRecord::into_document)
            .collect::<Result<Vec<_>, _>>()?;
        Cluster::new(self.topic, docs)
    }
}

impl From<&Cluster> for ClusterRecord {
    fn from(cluster: &Cluster) -> Self {
        Self {
            topic: cluster.topic().to_string(),
            documents: cluster.documents().iter().map(DocumentRecord::from).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoredRecord {
    pub e: f64,
    pub n: f64,
    pub c: f64,
    pub gold: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub id: String,
    pub label: String,
}

fn open(path: &Path) -> Result<fs::File, CorpusError> {
    fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses every non-blank line of `reader` as one `T`.
pub fn parse_records<T: DeserializeOwned, R: Read>(reader: R) -> Result<Vec<(usize, T)>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: PathBuf::from("<input>"),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| CorpusError::Json { line: line_no, source })?;
        out.push((line_no, record));
    }
    Ok(out)
}

pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>, CorpusError> {
    parse_records(open(path)?)
}

pub fn read_documents(path: &Path) -> Result<Vec<Document>, CorpusError> {
    read_records::<DocumentRecord>(path)?
        .into_iter()
        .map(|(line, r)| r.into_document().map_err(|source| CorpusError::Document { line, source }))
        .collect()
}

pub fn read_clusters(path: &Path) -> Result<Vec<Cluster>, CorpusError> {
    read_records::<ClusterRecord>(path)?
        .into_iter()
        .map(|(line, r)| r.into_cluster().map_err(|source| CorpusError::Document { line, source }))
        .collect()
}

pub fn read_edits(path: &Path) -> Result<Vec<EditPair>, CorpusError> {
    Ok(read_records(path)?.into_iter().map(|(_, e)| e).collect())
}

/// Scored examples, each triple validated.
pub fn read_scored(path: &Path) -> Result<Vec<(ScoreTriple, bool)>, CorpusError> {
    read_records::<ScoredRecord>(path)?
        .into_iter()
        .map(|(line, r)| {
            ScoreTriple::new(r.e, r.n, r.c)
                .map(|t| (t, r.gold))
                .map_err(|source| CorpusError::Score { line, source })
        })
        .collect()
}

pub fn read_corruptions(path: &Path) -> Result<Vec<CorruptionInstance>, CorpusError> {
    Ok(read_records(path)?.into_iter().map(|(_, c)| c).collect())
}

/// Writes one JSON object per line.
pub fn write_records<T: Serialize, W: Write>(mut writer: W, records: &[T]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn write_records_to<T: Serialize>(path: &Path, records: &[T]) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    write_records(std::io::BufWriter::new(file), records).map_err(io_err)
}
