use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::dataset::{SupportingFact, Triple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemaKind {
    DecomposerOut,
    SearcherOutS1,
    SearcherOutS2,
    TerminatorOut,
    TerminatorIdenticalOut,
    SummarizerOutS1,
    FinalS2Out,
    BaselineS1Out,
    BaselineS2Out,
}

/// Canonical key → accepted aliases. Alias and case-insensitive hits parse,
/// but are recorded as deviations and make the output format-valid only in
/// the tolerant sense.
pub const KEY_ALIASES: &[(&str, &[&str])] = &[
    ("answer", &["subanswer", "Answer", "sub-answer", "sub_answer"]),
    ("subquestion", &["sub-question", "sub_question"]),
    ("paragraph title", &["paragraph_title", "paragraph-title", "title"]),
    ("sentence id", &["sentence_id", "sentence index", "sentence_index"]),
    ("evidence", &["evidences", "triple"]),
    ("evidences", &["evidence", "triples"]),
    ("supporting-facts", &["supporting_facts", "supporting facts"]),
    ("explain", &["explanation", "reason"]),
    ("Answer", &["answer"]),
    ("Reason", &["reason"]),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParsedOutput {
    Decomposition {
        simple: bool,
        subquestion: Option<String>,
    },
    SearchHit {
        question: Option<String>,
        paragraph_title: Option<String>,
        answer: String,
        evidence: Option<Triple>,
        sentence_id: Option<usize>,
    },
    /// Terminator verdict; the "identical" variant is mapped to
    /// `continue = !identical`.
    Continue { proceed: bool },
    Summary {
        answer: String,
        reason: Option<String>,
    },
    Final {
        answer: String,
        explain: Option<String>,
        supporting_facts: Option<Vec<SupportingFact>>,
        evidences: Option<Vec<Triple>>,
    },
}

impl ParsedOutput {
    pub fn answer(&self) -> Option<&str> {
        match self {
            ParsedOutput::SearchHit { answer, .. }
            | ParsedOutput::Summary { answer, .. }
            | ParsedOutput::Final { answer, .. } => Some(answer),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Validated {
    pub output: ParsedOutput,
    /// Alias hits, case-insensitive key matches and tolerated omissions.
    pub deviations: Vec<String>,
    /// Keys present in the object but unknown to the schema.
    pub extra_keys: Vec<String>,
}

impl Validated {
    pub fn is_strict(&self) -> bool {
        self.deviations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("schema violation: {0}")]
pub struct SchemaViolation(pub String);

struct Fields<'a> {
    map: &'a Map<String, Value>,
    used: Vec<&'a str>,
    deviations: Vec<String>,
}

impl<'a> Fields<'a> {
    fn new(map: &'a Map<String, Value>) -> Self {
        Self {
            map,
            used: Vec::new(),
            deviations: Vec::new(),
        }
    }

    /// Exact key, then aliases, then case-insensitive match on either.
    fn get(&mut self, canonical: &str) -> Option<&'a Value> {
        let aliases = KEY_ALIASES
            .iter()
            .find(|(k, _)| *k == canonical)
            .map(|(_, a)| *a)
            .unwrap_or(&[]);
        if let Some((k, v)) = self.map.get_key_value(canonical) {
            self.used.push(k);
            return Some(v);
        }
        for alias in aliases {
            if let Some((k, v)) = self.map.get_key_value(*alias) {
                self.used.push(k);
                self.deviations.push(format!("key `{k}` read as `{canonical}`"));
                return Some(v);
            }
        }
        for name in std::iter::once(&canonical).chain(aliases.iter()) {
            let hit = self
                .map
                .iter()
                .find(|(k, _)| !self.used.contains(&k.as_str()) && k.eq_ignore_ascii_case(name));
            if let Some((k, v)) = hit {
                self.used.push(k);
                self.deviations
                    .push(format!("key `{k}` matched `{canonical}` case-insensitively"));
                return Some(v);
            }
        }
        None
    }

    fn require(&mut self, canonical: &str) -> Result<&'a Value, SchemaViolation> {
        self.get(canonical)
            .ok_or_else(|| SchemaViolation(format!("missing required key `{canonical}`")))
    }

    fn soft(&mut self, canonical: &str) -> Option<&'a Value> {
        let v = self.get(canonical);
        if v.is_none() {
            self.deviations.push(format!("missing key `{canonical}`"));
        }
        v
    }

    fn extras(&self) -> Vec<String> {
        self.map
            .keys()
            .filter(|k| !self.used.contains(&k.as_str()))
            .cloned()
            .collect()
    }
}

fn as_bool(value: &Value, key: &str, deviations: &mut Vec<String>) -> Result<bool, SchemaViolation> {
    match value {
        Value::Bool(b) => Ok(*b),
        Value::String(s) if s.eq_ignore_ascii_case("true") || s.eq_ignore_ascii_case("false") => {
            deviations.push(format!("`{key}` given as string"));
            Ok(s.eq_ignore_ascii_case("true"))
        }
        other => Err(SchemaViolation(format!("`{key}` must be a boolean, got {other}"))),
    }
}

/// Strings pass through; numbers are stringified since answers like `1932`
/// are routinely emitted unquoted.
fn as_text(value: &Value, key: &str) -> Result<String, SchemaViolation> {
    match value {
        Value::String(s) => Ok(s.trim().to_string()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(if *b { "yes" } else { "no" }.to_string()),
        other => Err(SchemaViolation(format!("`{key}` must be a string, got {other}"))),
    }
}

fn as_index(value: &Value, key: &str, deviations: &mut Vec<String>) -> Result<usize, SchemaViolation> {
    match value {
        Value::Number(n) => n
            .as_u64()
            .map(|v| v as usize)
            .ok_or_else(|| SchemaViolation(format!("`{key}` must be a non-negative integer"))),
        Value::String(s) => {
            let v = s
                .trim()
                .parse::<usize>()
                .map_err(|_| SchemaViolation(format!("`{key}` must be a non-negative integer")))?;
            deviations.push(format!("`{key}` given as string"));
            Ok(v)
        }
        _ => Err(SchemaViolation(format!("`{key}` must be a non-negative integer"))),
    }
}

fn as_triple(value: &Value, key: &str) -> Result<Triple, SchemaViolation> {
    let parts = value
        .as_array()
        .filter(|a| a.len() == 3)
        .ok_or_else(|| SchemaViolation(format!("`{key}` must be a [subject, relation, object] triple")))?;
    Ok(Triple(
        as_text(&parts[0], key)?,
        as_text(&parts[1], key)?,
        as_text(&parts[2], key)?,
    ))
}

fn as_facts(value: &Value, deviations: &mut Vec<String>) -> Result<Vec<SupportingFact>, SchemaViolation> {
    let items = value
        .as_array()
        .ok_or_else(|| SchemaViolation("`supporting-facts` must be a list".into()))?;
    items
        .iter()
        .map(|item| {
            let pair = item
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| SchemaViolation("`supporting-facts` entries must be [title, sentence id]".into()))?;
            let title = as_text(&pair[0], "supporting-facts")?;
            let idx = as_index(&pair[1], "supporting-facts", deviations)?;
            Ok(SupportingFact(title, idx))
        })
        .collect()
}

fn as_triples(value: &Value) -> Result<Vec<Triple>, SchemaViolation> {
    value
        .as_array()
        .ok_or_else(|| SchemaViolation("`evidences` must be a list".into()))?
        .iter()
        .map(|t| as_triple(t, "evidences"))
        .collect()
}

fn non_empty(answer: String, key: &str) -> Result<String, SchemaViolation> {
    if answer.is_empty() {
        Err(SchemaViolation(format!("`{key}` is empty")))
    } else {
        Ok(answer)
    }
}

/// Checks `value` against the schema for `kind`.
pub fn validate(kind: SchemaKind, value: &Value) -> Result<Validated, SchemaViolation> {
    let map = value
        .as_object()
        .ok_or_else(|| SchemaViolation("top-level value must be an object".into()))?;
    let mut f = Fields::new(map);
    let output = match kind {
        SchemaKind::DecomposerOut => {
            let simple_v = f.require("simple")?;
            let simple = as_bool(simple_v, "simple", &mut f.deviations)?;
            let sub = match f.get("subquestion") {
                None | Some(Value::Null) => None,
                Some(v) => Some(as_text(v, "subquestion")?),
            };
            match (simple, sub) {
                (true, Some(s)) if !s.is_empty() && !s.eq_ignore_ascii_case("null") => {
                    return Err(SchemaViolation(
                        "`simple` is true but `subquestion` is not null".into(),
                    ))
                }
                (true, _) => ParsedOutput::Decomposition {
                    simple: true,
                    subquestion: None,
                },
                (false, Some(s)) if !s.is_empty() => ParsedOutput::Decomposition {
                    simple: false,
                    subquestion: Some(s),
                },
                (false, _) => {
                    return Err(SchemaViolation(
                        "`simple` is false but `subquestion` is missing".into(),
                    ))
                }
            }
        }
        SchemaKind::SearcherOutS1 | SchemaKind::SearcherOutS2 => {
            let answer = non_empty(as_text(f.require("answer")?, "answer")?, "answer")?;
            let question = f.soft("question").map(|v| as_text(v, "question")).transpose()?;
            let paragraph_title = f
                .soft("paragraph title")
                .map(|v| as_text(v, "paragraph title"))
                .transpose()?;
            let (evidence, sentence_id) = if kind == SchemaKind::SearcherOutS2 {
                let evidence = as_triple(f.require("evidence")?, "evidence")?;
                let sentence_id = match f.get("sentence id") {
                    None | Some(Value::Null) => None,
                    Some(v) => Some(as_index(v, "sentence id", &mut f.deviations)?),
                };
                (Some(evidence), sentence_id)
            } else {
                (None, None)
            };
            ParsedOutput::SearchHit {
                question,
                paragraph_title,
                answer,
                evidence,
                sentence_id,
            }
        }
        SchemaKind::TerminatorOut => {
            let v = f.require("continue")?;
            ParsedOutput::Continue {
                proceed: as_bool(v, "continue", &mut f.deviations)?,
            }
        }
        SchemaKind::TerminatorIdenticalOut => {
            let v = f.require("identical")?;
            ParsedOutput::Continue {
                proceed: !as_bool(v, "identical", &mut f.deviations)?,
            }
        }
        SchemaKind::SummarizerOutS1 => {
            let answer = non_empty(as_text(f.require("Answer")?, "Answer")?, "Answer")?;
            let reason = f.soft("Reason").map(|v| as_text(v, "Reason")).transpose()?;
            ParsedOutput::Summary { answer, reason }
        }
        SchemaKind::FinalS2Out | SchemaKind::BaselineS2Out => {
            let facts = as_facts(f.require("supporting-facts")?, &mut f.deviations)?;
            let evidences = as_triples(f.require("evidences")?)?;
            let answer = as_text(f.require("answer")?, "answer")?;
            let explain = if kind == SchemaKind::FinalS2Out {
                f.soft("explain")
            } else {
                f.get("explain")
            }
            .map(|v| as_text(v, "explain"))
            .transpose()?;
            ParsedOutput::Final {
                answer,
                explain,
                supporting_facts: Some(facts),
                evidences: Some(evidences),
            }
        }
        SchemaKind::BaselineS1Out => {
            let answer = as_text(f.require("answer")?, "answer")?;
            let explain = f.soft("explain").map(|v| as_text(v, "explain")).transpose()?;
            ParsedOutput::Final {
                answer,
                explain,
                supporting_facts: None,
                evidences: None,
            }
        }
    };
    let extra_keys = f.extras();
    if !extra_keys.is_empty() {
        log::debug!("{kind:?}: ignoring extra keys {extra_keys:?}");
    }
    Ok(Validated {
        output,
        deviations: f.deviations,
        extra_keys,
    })
}
