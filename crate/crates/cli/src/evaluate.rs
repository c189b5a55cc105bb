//! `eval`: score every done record of a run directory.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use fsmqa_core::dataset::read_cache;
use fsmqa_core::eval::{aggregate, render_table, score_sample, MetricsReport, Prediction, SampleScore, TaxonomyConfig};
use serde::{Deserialize, Serialize};

use crate::fsio::{read_transcript, transcript_path, write_atomic, write_json_atomic, METRICS_JSON, METRICS_TXT, RECORDS, SCORES};
use crate::manifest::{RecordStatus, RunManifest};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub reports: Vec<MetricsReport>,
    /// Records left out because they are not done.
    pub skipped: usize,
}

/// One line of `scores.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreLine {
    pub strategy: String,
    #[serde(flatten)]
    pub score: SampleScore,
}

/// Strategies whose transcripts a run produces.
pub fn produced_strategies(strategy: &str) -> Vec<String> {
    match strategy.to_ascii_lowercase().as_str() {
        "sg-fsm2" => vec!["sg-fsm1".into(), "sg-fsm2".into()],
        other => vec![other.to_string()],
    }
}

pub fn cmd_eval(run_dir: &Path) -> Result<EvalOutcome, CliError> {
    let manifest = RunManifest::load(run_dir)?
        .ok_or_else(|| CliError::artifact(run_dir, "no manifest.json; not a run directory"))?;
    let records = read_cache(&run_dir.join(RECORDS))?;
    let by_id: HashMap<&str, _> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    let config = &manifest.config;
    let taxonomy = TaxonomyConfig::default();
    let done: Vec<&str> = manifest
        .records
        .iter()
        .filter(|r| r.status == RecordStatus::Done)
        .map(|r| r.id.as_str())
        .collect();
    let skipped = manifest.records.len() - done.len();

    let mut reports = Vec::new();
    let mut lines = Vec::new();
    for strategy in produced_strategies(&config.strategy) {
        let mut scores = Vec::with_capacity(done.len());
        for id in &done {
            let record = by_id
                .get(id)
                .ok_or_else(|| CliError::artifact(run_dir.join(RECORDS), format!("record {id} missing from cache")))?;
            let transcript = read_transcript(&transcript_path(run_dir, &strategy, id))?;
            let prediction = Prediction::from_transcript(&transcript);
            let score = score_sample(&prediction, record, Some(&transcript), &taxonomy);
            lines.push(ScoreLine {
                strategy: strategy.clone(),
                score: score.clone(),
            });
            scores.push(score);
        }
        let mut report = aggregate(&strategy, config.kind, config.setting, &scores);
        if skipped > 0 {
            report
                .notes
                .push(format!("{skipped} of {} records are not done and were not scored", manifest.records.len()));
        }
        reports.push(report);
    }

    write_json_atomic(&run_dir.join(METRICS_JSON), &reports)?;
    write_atomic(&run_dir.join(METRICS_TXT), render_text(&reports).as_bytes())?;
    let mut jsonl = Vec::new();
    for line in &lines {
        serde_json::to_writer(&mut jsonl, line).map_err(|e| CliError::artifact(run_dir.join(SCORES), e))?;
        jsonl.push(b'\n');
    }
    write_atomic(&run_dir.join(SCORES), &jsonl)?;
    Ok(EvalOutcome { reports, skipped })
}

/// Table, per-strategy error histogram, then the distinct notes.
pub fn render_text(reports: &[MetricsReport]) -> String {
    let mut out = render_table(reports);
    for r in reports {
        let _ = write!(out, "\nError categories ({}):", r.strategy);
        if r.error_histogram.is_empty() {
            out.push_str(" none");
        }
        for (cat, n) in &r.error_histogram {
            let _ = write!(out, " {cat}={n}");
        }
    }
    out.push('\n');
    let mut seen = Vec::new();
    for note in reports.iter().flat_map(|r| &r.notes) {
        if !seen.contains(&note) {
            let _ = writeln!(out, "note: {note}");
            seen.push(note);
        }
    }
    out
}
