//! Snapshot persistence and template exports.
//!
//! A snapshot is a single pretty-printed JSON document carrying a
//! `format_version`, both configurations, the counters and every cluster.
//! Wildcard template positions are stored as `null`, so a literal `*` word
//! survives a round trip.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;
use thiserror::Error;

use crate::cluster::{Cluster, ClusterId, ClusterIndex, MiningConfig};
use crate::miner::{Counters, Miner};
use crate::tokenizer::TokenizerConfig;
use crate::vectors::{TemplateWordVector, Token, WordLengthVector};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
    #[error("unsupported snapshot version {found} (this build reads version {supported})")]
    VersionMismatch { found: u64, supported: u32 },
    #[error("corrupt snapshot: {0}")]
    CorruptState(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredCluster {
    pub id: ClusterId,
    pub length_vec: Vec<u32>,
    /// `None` marks a wildcard.
    pub template: Vec<Option<String>>,
    pub match_count: u64,
    pub first_seen: DateTime<Utc>,
    pub last_seen: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub format_version: u32,
    pub mining: MiningConfig,
    pub tokenizer: TokenizerConfig,
    pub next_cluster_id: ClusterId,
    pub counters: Counters,
    pub clusters: Vec<StoredCluster>,
}

impl StateSnapshot {
    pub fn from_miner(miner: &Miner) -> Self {
        let clusters = miner
            .index
            .clusters()
            .into_iter()
            .map(|c| StoredCluster {
                id: c.id(),
                length_vec: c.length_vec().as_slice().to_vec(),
                template: c
                    .template()
                    .tokens()
                    .iter()
                    .map(|t| t.as_word().map(str::to_string))
                    .collect(),
                match_count: c.match_count(),
                first_seen: c.first_seen(),
                last_seen: c.last_seen(),
            })
            .collect();
        StateSnapshot {
            format_version: FORMAT_VERSION,
            mining: miner.mining,
            tokenizer: miner.tokenizer.clone(),
            next_cluster_id: miner.index.next_cluster_id(),
            counters: miner.counters,
            clusters,
        }
    }

    pub fn into_miner(self) -> Result<Miner, StateError> {
        if self.format_version != FORMAT_VERSION {
            return Err(StateError::VersionMismatch {
                found: self.format_version.into(),
                supported: FORMAT_VERSION,
            });
        }
        self.mining
            .validate()
            .map_err(|e| StateError::CorruptState(e.to_string()))?;

        let mut clusters = Vec::with_capacity(self.clusters.len());
        for stored in self.clusters {
            let length_vec = WordLengthVector::new(stored.length_vec)
                .ok_or_else(|| StateError::CorruptState(format!("cluster {}: invalid length vector", stored.id)))?;
            let template = TemplateWordVector::from_tokens(
                stored
                    .template
                    .into_iter()
                    .map(|w| w.map_or(Token::Wildcard, Token::Word))
                    .collect(),
            );
            clusters.push(Cluster::from_parts(
                stored.id,
                length_vec,
                template,
                stored.match_count,
                stored.first_seen,
                stored.last_seen,
            ));
        }
        let index = ClusterIndex::from_clusters(clusters, self.next_cluster_id)
            .map_err(|e| StateError::CorruptState(e.to_string()))?;
        Ok(Miner::from_parts(index, self.mining, self.tokenizer, self.counters))
    }

    pub fn to_json(&self) -> Result<String, StateError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Parses a snapshot document. The version is checked before the rest of
    /// the document is interpreted.
    pub fn from_json(text: &str) -> Result<Self, StateError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| StateError::CorruptState(e.to_string()))?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| StateError::CorruptState("missing format_version".into()))?;
        if version != u64::from(FORMAT_VERSION) {
            return Err(StateError::VersionMismatch {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        serde_json::from_value(value).map_err(|e| StateError::CorruptState(e.to_string()))
    }
}

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place.
fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn save_state(miner: &Miner, path: impl AsRef<Path>) -> Result<(), StateError> {
    let doc = StateSnapshot::from_miner(miner).to_json()?;
    write_atomic(path.as_ref(), doc.as_bytes())?;
    Ok(())
}

pub fn load_state(path: impl AsRef<Path>) -> Result<Miner, StateError> {
    let text = std::fs::read_to_string(path)?;
    StateSnapshot::from_json(&text)?.into_miner()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Error)]
#[error("unknown export format {0:?} (expected json, csv or text)")]
pub struct ParseExportFormatError(String);

impl FromStr for ExportFormat {
    type Err = ParseExportFormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ExportFormat::Json),
            "csv" => Ok(ExportFormat::Csv),
            "text" | "txt" => Ok(ExportFormat::Text),
            _ => Err(ParseExportFormatError(s.to_string())),
        }
    }
}

/// One row of a json or csv template export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateRecord {
    pub id: ClusterId,
    pub template: String,
    pub count: u64,
    pub first_seen: DateTime<Utc>,
    pub last_seen: DateTime<Utc>,
}

fn template_records(index: &ClusterIndex) -> Vec<TemplateRecord> {
    index
        .clusters()
        .into_iter()
        .map(|c| TemplateRecord {
            id: c.id(),
            template: c.template().render(),
            count: c.match_count(),
            first_seen: c.first_seen(),
            last_seen: c.last_seen(),
        })
        .collect()
}

pub fn write_templates<W: Write>(index: &ClusterIndex, format: ExportFormat, mut out: W) -> io::Result<()> {
    let records = template_records(index);
    match format {
        ExportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &records)?;
            writeln!(out)?;
        }
        ExportFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            if records.is_empty() {
                w.write_record(["id", "template", "count", "first_seen", "last_seen"])?;
            }
            for r in &records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        ExportFormat::Text => {
            for r in &records {
                writeln!(out, "{}\t{}", r.template, r.count)?;
            }
        }
    }
    out.flush()
}

pub fn export_templates(index: &ClusterIndex, format: ExportFormat, path: impl AsRef<Path>) -> Result<(), StateError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_templates(index, format, &mut out)?;
    out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    Ok(())
}
