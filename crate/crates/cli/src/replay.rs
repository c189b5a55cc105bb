//! `replay`: rerun a transcript against its own recorded responses.

use std::path::{Path, PathBuf};

use fsmqa_core::dataset::{read_cache, QuestionRecord};
use fsmqa_core::gateway::{Gateway, ScriptedBackend};
use fsmqa_core::prompt::PromptKit;
use fsmqa_core::strategy::{RunContext, StrategyRegistry};
use fsmqa_core::transcript::{fingerprint, RunTranscript};
use serde::Serialize;

use crate::fsio::{read_transcript, RECORDS};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Divergence {
    /// First differing entry; `None` when entries match but the outcome
    /// fields do not.
    pub entry: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplayReport {
    pub record_id: String,
    pub strategy: String,
    pub equal: bool,
    pub divergence: Option<Divergence>,
}

/// `records` is a `records.jsonl` cache; when absent it is looked up in
/// the transcript's ancestor directories.
pub fn cmd_replay(transcript_path: &Path, records: Option<&Path>) -> Result<ReplayReport, CliError> {
    let recorded = read_transcript(transcript_path)?;
    let cache = match records {
        Some(p) => p.to_path_buf(),
        None => find_records(transcript_path)
            .ok_or_else(|| CliError::artifact(transcript_path, "no records.jsonl found above the transcript; pass --records"))?,
    };
    let record = read_cache(&cache)?
        .into_iter()
        .find(|r| r.id == recorded.record_id)
        .ok_or_else(|| CliError::artifact(&cache, format!("record {} not in cache", recorded.record_id)))?;
    replay_transcript(&recorded, &record)
}

pub fn replay_transcript(recorded: &RunTranscript, record: &QuestionRecord) -> Result<ReplayReport, CliError> {
    let report = |divergence: Option<Divergence>| ReplayReport {
        record_id: recorded.record_id.clone(),
        strategy: recorded.strategy.clone(),
        equal: divergence.is_none(),
        divergence,
    };
    if let Some(d) = integrity(recorded) {
        return Ok(report(Some(d)));
    }
    let strategy = StrategyRegistry::builtin()
        .get(&recorded.strategy)
        .ok_or_else(|| CliError::Config(format!("unknown strategy {:?} in transcript", recorded.strategy)))?;
    let gateway = Gateway::scripted(ScriptedBackend::from_transcript(recorded));
    let kit = PromptKit::builtin();
    let ctx = RunContext {
        kit: &kit,
        model: &gateway,
        params: recorded.params,
    };
    let replayed = strategy.run(record, &ctx);
    Ok(report(compare(&recorded.without_timing(), &replayed.without_timing())))
}

fn find_records(transcript: &Path) -> Option<PathBuf> {
    transcript
        .ancestors()
        .skip(1)
        .map(|d| d.join(RECORDS))
        .find(|p| p.is_file())
}

/// Stored fingerprints must match the stored prompt and response.
fn integrity(t: &RunTranscript) -> Option<Divergence> {
    t.entries.iter().enumerate().find_map(|(i, e)| {
        let (Some(fp), Some(prompt), Some(response)) = (&e.fingerprint, &e.prompt, &e.raw_response) else {
            return None;
        };
        (fingerprint(prompt, response) != *fp).then(|| Divergence {
            entry: Some(i),
            detail: format!("recorded exchange does not match its fingerprint {fp}; the transcript was edited"),
        })
    })
}

fn compare(recorded: &RunTranscript, replayed: &RunTranscript) -> Option<Divergence> {
    for (i, (a, b)) in recorded.entries.iter().zip(&replayed.entries).enumerate() {
        if a != b {
            let detail = if a.prompt != b.prompt {
                "prompt differs".to_string()
            } else if a.raw_response != b.raw_response {
                "response differs".to_string()
            } else if a.parse_outcome != b.parse_outcome {
                format!("parse outcome {:?} recorded, {:?} on replay", a.parse_outcome, b.parse_outcome)
            } else {
                "entry differs".to_string()
            };
            return Some(Divergence { entry: Some(i), detail });
        }
    }
    let (n, m) = (recorded.entries.len(), replayed.entries.len());
    if n != m {
        return Some(Divergence {
            entry: Some(n.min(m)),
            detail: format!("{n} entries recorded, {m} on replay"),
        });
    }
    if recorded != replayed {
        let detail = if recorded.output != replayed.output {
            "final output differs"
        } else if recorded.incomplete != replayed.incomplete {
            "completion status differs"
        } else {
            "run summary differs"
        };
        return Some(Divergence {
            entry: None,
            detail: detail.into(),
        });
    }
    None
}
