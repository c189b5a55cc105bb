use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatasetError, QuestionRecord};

pub const CACHE_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CacheHeader {
    schema: String,
    version: u32,
}

/// Writes records as canonical JSONL preceded by a one-line schema header.
pub fn write_cache(path: &Path, records: &[QuestionRecord]) -> Result<(), DatasetError> {
    let io = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    let mut out = BufWriter::new(file);
    let header = CacheHeader {
        schema: "fsmqa.records".into(),
        version: CACHE_SCHEMA_VERSION,
    };
    let line = serde_json::to_string(&header).expect("header serializes");
    writeln!(out, "{line}").map_err(io)?;
    for record in records {
        let line = serde_json::to_string(record).expect("record serializes");
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_cache(path: &Path) -> Result<Vec<QuestionRecord>, DatasetError> {
    let io = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut lines = BufReader::new(file).lines();
    let header_line = match lines.next() {
        None => return Ok(Vec::new()),
        Some(line) => line.map_err(io)?,
    };
    let header: CacheHeader =
        serde_json::from_str(&header_line).map_err(|e| DatasetError::MalformedFile {
            location: "line 1".into(),
            reason: format!("bad cache header: {e}"),
        })?;
    if header.version != CACHE_SCHEMA_VERSION {
        return Err(DatasetError::CacheVersion(header.version));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| DatasetError::MalformedFile {
            location: format!("line {}", i + 2),
            reason: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}
