//! Unified question records and loaders for the HotpotQA, 2WikiMultiHopQA
//! and MuSiQue distribution files.

mod cache;
mod hotpot;
mod musique;
mod sample;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{read_cache, write_cache, CACHE_SCHEMA_VERSION};
pub use musique::split_sentences;
pub use sample::{sample, SamplePlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DatasetKind {
    HotpotQA,
    TwoWiki,
    Musique,
}

impl DatasetKind {
    /// Candidate paragraphs per record in a conforming distribution file.
    pub fn expected_paragraphs(self) -> usize {
        match self {
            DatasetKind::HotpotQA | DatasetKind::TwoWiki => 10,
            DatasetKind::Musique => 20,
        }
    }

    pub fn has_sentence_level_gold(self) -> bool {
        !matches!(self, DatasetKind::Musique)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::HotpotQA => "hotpotqa",
            DatasetKind::TwoWiki => "2wiki",
            DatasetKind::Musique => "musique",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hotpotqa" | "hotpot" => Ok(DatasetKind::HotpotQA),
            "2wiki" | "2wikimultihopqa" | "twowiki" | "2wikiqa" => Ok(DatasetKind::TwoWiki),
            "musique" => Ok(DatasetKind::Musique),
            other => Err(format!("unknown dataset kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub title: String,
    /// Zero-based sentence positions are the indices used by supporting facts.
    pub sentences: Vec<String>,
}

impl Paragraph {
    pub fn text(&self) -> String {
        self.sentences
            .iter()
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A (title, sentence index) pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SupportingFact(pub String, pub usize);

/// A (subject, relation, object) evidence triple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple(pub String, pub String, pub String);

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0, self.1, self.2)
    }
}

/// One gold decomposition hop (MuSiQue ships these).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldHop {
    pub question: String,
    pub answer: String,
    pub paragraph_title: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub id: String,
    pub dataset: DatasetKind,
    pub question: String,
    pub paragraphs: Vec<Paragraph>,
    pub gold_answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_supporting_facts: Option<Vec<SupportingFact>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_evidences: Option<Vec<Triple>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_paragraphs: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_decomposition: Option<Vec<GoldHop>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hop_count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_type: Option<String>,
}

impl QuestionRecord {
    pub fn paragraph(&self, title: &str) -> Option<&Paragraph> {
        self.paragraphs
            .iter()
            .find(|p| p.title == title)
            .or_else(|| {
                let wanted = title.trim().to_lowercase();
                self.paragraphs
                    .iter()
                    .find(|p| p.title.trim().to_lowercase() == wanted)
            })
    }

    /// Titles of gold paragraphs, from explicit annotations or supporting facts.
    pub fn gold_titles(&self) -> Option<Vec<String>> {
        if let Some(titles) = &self.gold_paragraphs {
            return Some(titles.clone());
        }
        self.gold_supporting_facts.as_ref().map(|facts| {
            let mut titles: Vec<String> = Vec::new();
            for SupportingFact(title, _) in facts {
                if !titles.contains(title) {
                    titles.push(title.clone());
                }
            }
            titles
        })
    }

    /// Checks record invariants; returns the first violation.
    pub fn check(&self) -> Result<(), String> {
        if self.paragraphs.is_empty() {
            return Err("record has no candidate paragraphs".into());
        }
        for p in &self.paragraphs {
            if p.sentences.is_empty() {
                return Err(format!("paragraph `{}` has no sentences", p.title));
            }
        }
        if let Some(facts) = &self.gold_supporting_facts {
            if self.dataset == DatasetKind::Musique {
                return Err("musique records carry no sentence-level supporting facts".into());
            }
            for SupportingFact(title, idx) in facts {
                match self.paragraphs.iter().find(|p| &p.title == title) {
                    None => return Err(format!("supporting fact title `{title}` not in context")),
                    Some(p) if *idx >= p.sentences.len() => {
                        log::debug!(
                            "record {}: supporting fact ({title}, {idx}) beyond paragraph length",
                            self.id
                        );
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file at {location}: {reason}")]
    MalformedFile { location: String, reason: String },
    #[error("sample size {size} exceeds corpus size {corpus}")]
    SizeExceedsCorpus { size: usize, corpus: usize },
    #[error("unsupported cache schema version {0}")]
    CacheVersion(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadOptions {
    /// Skip and log records that fail to decode or violate invariants
    /// instead of failing the whole file.
    pub salvage: bool,
    /// MuSiQue: also ingest records marked unanswerable.
    pub include_unanswerable: bool,
}

pub fn load(path: &Path, kind: DatasetKind) -> Result<Vec<QuestionRecord>, DatasetError> {
    load_with(path, kind, LoadOptions::default())
}

pub fn load_with(
    path: &Path,
    kind: DatasetKind,
    options: LoadOptions,
) -> Result<Vec<QuestionRecord>, DatasetError> {
    let bytes = std::fs::read(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = match String::from_utf8(bytes) {
        Ok(text) => text,
        Err(err) => {
            log::warn!("{}: invalid UTF-8 replaced", path.display());
            String::from_utf8_lossy(err.as_bytes()).into_owned()
        }
    };
    parse_str(&text, kind, options)
}

/// Parses file contents that are either one JSON array or JSON lines.
pub fn parse_str(
    text: &str,
    kind: DatasetKind,
    options: LoadOptions,
) -> Result<Vec<QuestionRecord>, DatasetError> {
    let raw = raw_items(text)?;
    let mut records = Vec::with_capacity(raw.len());
    for (location, value) in raw {
        let decoded = match kind {
            DatasetKind::HotpotQA | DatasetKind::TwoWiki => hotpot::decode(&value, kind),
            DatasetKind::Musique => musique::decode(&value, options.include_unanswerable),
        };
        let record = match decoded {
            Ok(Some(record)) => record,
            Ok(None) => continue,
            Err(reason) => {
                if options.salvage {
                    log::warn!("skipping record at {location}: {reason}");
                    continue;
                }
                return Err(DatasetError::MalformedFile { location, reason });
            }
        };
        if let Err(reason) = record.check() {
            if options.salvage {
                log::warn!("skipping record {} at {location}: {reason}", record.id);
                continue;
            }
            return Err(DatasetError::MalformedFile { location, reason });
        }
        records.push(record);
    }
    Ok(records)
}

fn raw_items(text: &str) -> Result<Vec<(String, serde_json::Value)>, DatasetError> {
    let trimmed = text.trim_start();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    if trimmed.starts_with('[') {
        let value: Vec<serde_json::Value> =
            serde_json::from_str(text).map_err(|e| DatasetError::MalformedFile {
                location: format!("line {} column {}", e.line(), e.column()),
                reason: e.to_string(),
            })?;
        return Ok(value
            .into_iter()
            .enumerate()
            .map(|(i, v)| (format!("item {i}"), v))
            .collect());
    }
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(line).map_err(|e| DatasetError::MalformedFile {
            location: format!("line {} column {}", i + 1, e.column()),
            reason: e.to_string(),
        })?;
        items.push((format!("line {}", i + 1), value));
    }
    Ok(items)
}

pub(crate) fn str_field<'a>(value: &'a serde_json::Value, key: &str) -> Result<&'a str, String> {
    value
        .get(key)
        .and_then(|v| v.as_str())
        .ok_or_else(|| format!("missing string field `{key}`"))
}
