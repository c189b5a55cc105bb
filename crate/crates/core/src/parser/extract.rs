use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    /// No brace-balanced span parsed as strict JSON. `balanced_spans` counts
    /// the spans that were tried.
    #[error("no JSON object found ({balanced_spans} balanced spans tried)")]
    NoJsonFound { balanced_spans: usize },
}

/// Returns the first brace-balanced span of `text` that parses as strict JSON.
///
/// Code fences and surrounding prose need no special handling: candidates
/// are located by brace matching alone, so anything outside the span is
/// ignored.
pub fn extract_json(text: &str) -> Result<Value, ExtractError> {
    let mut tried = 0;
    for span in balanced_spans(text) {
        tried += 1;
        if let Ok(value) = serde_json::from_str::<Value>(span) {
            return Ok(value);
        }
    }
    Err(ExtractError::NoJsonFound {
        balanced_spans: tried,
    })
}

/// All strictly parseable JSON objects, left to right. Once a span parses,
/// scanning resumes after its end so nested objects are not reported twice.
pub fn extract_all_json(text: &str) -> (Vec<Value>, usize) {
    let bytes = text.as_bytes();
    let mut found = Vec::new();
    let mut tried = 0;
    let mut pos = 0;
    while let Some(offset) = bytes[pos..].iter().position(|&b| b == b'{') {
        let start = pos + offset;
        match match_close(bytes, start) {
            Some(end) => {
                tried += 1;
                match serde_json::from_str::<Value>(&text[start..=end]) {
                    Ok(value) => {
                        found.push(value);
                        pos = end + 1;
                    }
                    Err(_) => pos = start + 1,
                }
            }
            None => pos = start + 1,
        }
    }
    (found, tried)
}

/// Brace-balanced spans in order of their opening brace, outermost first.
fn balanced_spans(text: &str) -> impl Iterator<Item = &str> {
    let bytes = text.as_bytes();
    bytes
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == b'{')
        .filter_map(move |(start, _)| match_close(bytes, start).map(|end| &text[start..=end]))
}

/// Index of the brace closing the one at `start`, skipping braces inside
/// JSON string literals. Braces and quotes are ASCII, so byte scanning never
/// splits a UTF-8 sequence.
fn match_close(bytes: &[u8], start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}
