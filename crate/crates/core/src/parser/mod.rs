//! JSON extraction, schema validation and the revisor repair loop.

mod extract;
mod schema;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsm::FsmBudgets;
use crate::gateway::{GatewayError, ModelCall};
use crate::prompt::{PromptKit, Role};
use crate::transcript::Exchange;

pub use extract::{extract_all_json, extract_json, ExtractError};
pub use schema::{validate, ParsedOutput, SchemaKind, SchemaViolation, Validated, KEY_ALIASES};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum ParseFailure {
    #[error("no JSON object found")]
    NoJsonFound,
    #[error("JSON-like span found but none parses strictly")]
    SyntaxError,
    #[error("schema violation: {0}")]
    SchemaViolation(String),
}

/// Extract then validate. With several objects in the text, the first one
/// that satisfies the schema wins.
pub fn parse_text(kind: SchemaKind, raw: &str) -> Result<Validated, ParseFailure> {
    let (values, tried) = extract_all_json(raw);
    if values.is_empty() {
        return Err(if tried == 0 {
            ParseFailure::NoJsonFound
        } else {
            ParseFailure::SyntaxError
        });
    }
    if values.len() > 1 {
        log::debug!("{kind:?}: {} JSON objects in response", values.len());
    }
    let mut first_violation = None;
    for v in &values {
        match validate(kind, v) {
            Ok(ok) => return Ok(ok),
            Err(e) => {
                first_violation.get_or_insert(e);
            }
        }
    }
    Err(ParseFailure::SchemaViolation(
        first_violation.map(|e| e.0).unwrap_or_default(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseResult {
    pub outcome: Result<Validated, ParseFailure>,
    /// A revisor response supplied the accepted text.
    pub repaired: bool,
    /// Texts examined: the raw output plus one per revisor call.
    pub attempts: u32,
    pub revisions: Vec<Exchange>,
}

impl ParseResult {
    pub fn is_ok(&self) -> bool {
        self.outcome.is_ok()
    }

    /// The accepted text used canonical keys only.
    pub fn is_strict(&self) -> bool {
        self.outcome.as_ref().is_ok_and(Validated::is_strict)
    }

    pub fn output(&self) -> Option<&ParsedOutput> {
        self.outcome.as_ref().ok().map(|v| &v.output)
    }
}

/// Parses `raw`; on failure asks the revisor to rewrite the latest text, up
/// to `budgets.max_revisions_per_output` times.
pub fn parse_with_repair(
    kind: SchemaKind,
    raw: &str,
    kit: &PromptKit,
    model: &dyn ModelCall,
    budgets: &FsmBudgets,
) -> Result<ParseResult, GatewayError> {
    let mut outcome = parse_text(kind, raw);
    let mut attempts = 1;
    let mut revisions = Vec::new();
    let mut latest = raw.to_string();
    while outcome.is_err() && attempts <= budgets.max_revisions_per_output {
        let prompt = kit.revisor(&latest).text;
        let response = model.call(Role::Revisor, &prompt)?.text;
        attempts += 1;
        outcome = parse_text(kind, &response);
        revisions.push(Exchange {
            role: Role::Revisor,
            prompt,
            response: response.clone(),
        });
        latest = response;
    }
    Ok(ParseResult {
        repaired: outcome.is_ok() && attempts > 1,
        outcome,
        attempts,
        revisions,
    })
}
