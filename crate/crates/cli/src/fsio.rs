//! Run-directory layout and crash-safe writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use fsmqa_core::transcript::RunTranscript;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const RECORDS: &str = "records.jsonl";
pub const TRANSCRIPTS_DIR: &str = "transcripts";
pub const TRANSCRIPT_LOG: &str = "transcripts.jsonl";
pub const METRICS_JSON: &str = "metrics.json";
pub const METRICS_TXT: &str = "metrics.txt";
pub const SCORES: &str = "scores.jsonl";

/// Writes to a sibling temp file and renames it into place, so readers see
/// either the old or the new content.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(CliError::io(dir))?;
    tmp.write_all(bytes).map_err(CliError::io(path))?;
    tmp.as_file().sync_all().map_err(CliError::io(path))?;
    tmp.persist(path).map_err(|e| CliError::io(path)(e.error))?;
    Ok(())
}

pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::artifact(path, e))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::artifact(path, e))
}

/// File-system-safe name for a record id. Ids that need escaping get a
/// short hash suffix so distinct ids never collide.
pub fn file_stem(record_id: &str) -> String {
    let safe: String = record_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect();
    if safe == record_id && !safe.starts_with('.') && !safe.is_empty() {
        safe
    } else {
        let digest = hex::encode(&Sha256::digest(record_id.as_bytes())[..4]);
        format!("{}-{digest}", safe.trim_start_matches('.'))
    }
}

pub fn transcript_path(run_dir: &Path, strategy: &str, record_id: &str) -> PathBuf {
    run_dir
        .join(TRANSCRIPTS_DIR)
        .join(strategy)
        .join(format!("{}.json", file_stem(record_id)))
}

pub fn read_transcript(path: &Path) -> Result<RunTranscript, CliError> {
    read_json(path)
}

/// Appends one JSON line; the caller is the only writer of `path`.
pub fn append_jsonl<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut line = serde_json::to_vec(value).map_err(|e| CliError::artifact(path, e))?;
    line.push(b'\n');
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(CliError::io(path))?;
    f.write_all(&line).map_err(CliError::io(path))
}
