//! Thought/Action/Observation loop over the record's own paragraphs.

use std::sync::LazyLock;
use std::time::Instant;

use regex::Regex;

use super::baseline::final_from;
use super::{RunContext, Strategy};
use crate::dataset::{Paragraph, QuestionRecord};
use crate::fsm::FsmEvent;
use crate::parser::{parse_text, SchemaKind};
use crate::prompt::{format_paragraphs, Role, SlotMap};
use crate::transcript::{FinalOutput, RunTranscript, StepRecord};

static ACTION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)Action(?:\s*\d+)?\s*:\s*(Search|Lookup|Finish)\[(.*)\]").expect("static regex"));

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReactAction {
    Search(String),
    Lookup(String),
    Finish(String),
}

impl ReactAction {
    /// First action in a model turn. `Finish` takes everything up to the last
    /// closing bracket so JSON payloads survive; the others stop at the first.
    pub fn parse(text: &str) -> Option<(Self, usize)> {
        let caps = ACTION.captures(text)?;
        let kind = caps.get(1)?.as_str();
        let body = caps.get(2)?;
        let (arg, end) = if kind == "Finish" {
            (body.as_str(), body.end() + 1)
        } else {
            let close = body.as_str().find(']').unwrap_or(body.len());
            (&body.as_str()[..close], body.start() + close + 1)
        };
        let arg = arg.trim().to_string();
        let action = match kind {
            "Search" => ReactAction::Search(arg),
            "Lookup" => ReactAction::Lookup(arg),
            _ => ReactAction::Finish(arg),
        };
        Some((action, end.min(text.len())))
    }
}

/// Deterministic search and lookup over a fixed paragraph set.
#[derive(Debug)]
pub struct ReactTools<'a> {
    paragraphs: &'a [Paragraph],
    current: Option<&'a Paragraph>,
    lookup_keyword: String,
    lookup_cursor: usize,
}

fn tokens(s: &str) -> Vec<String> {
    s.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

impl<'a> ReactTools<'a> {
    pub fn new(paragraphs: &'a [Paragraph]) -> Self {
        Self {
            paragraphs,
            current: None,
            lookup_keyword: String::new(),
            lookup_cursor: 0,
        }
    }

    pub fn search(&mut self, entity: &str) -> String {
        let wanted = entity.trim().to_lowercase();
        let exact = self.paragraphs.iter().find(|p| p.title.trim().to_lowercase() == wanted);
        let contained = || {
            self.paragraphs.iter().find(|p| {
                let title = p.title.to_lowercase();
                !wanted.is_empty() && (title.contains(&wanted) || wanted.contains(&title))
            })
        };
        if let Some(p) = exact.or_else(contained) {
            self.current = Some(p);
            self.lookup_keyword.clear();
            self.lookup_cursor = 0;
            return format_paragraphs([p]);
        }
        let query = tokens(entity);
        let mut scored: Vec<(usize, &str)> = self
            .paragraphs
            .iter()
            .map(|p| {
                let t = tokens(&p.title);
                (query.iter().filter(|q| t.contains(q)).count(), p.title.as_str())
            })
            .filter(|(n, _)| *n > 0)
            .collect();
        scored.sort_by_key(|s| std::cmp::Reverse(s.0));
        let similar: Vec<&str> = scored.iter().take(5).map(|(_, t)| *t).collect();
        format!("Could not find [{entity}]. Similar: {similar:?}.")
    }

    pub fn lookup(&mut self, keyword: &str) -> String {
        let Some(p) = self.current else {
            return "No paragraph selected; Search first.".into();
        };
        let key = keyword.trim().to_lowercase();
        if key != self.lookup_keyword {
            self.lookup_keyword = key.clone();
            self.lookup_cursor = 0;
        }
        let hits: Vec<(usize, &String)> = p
            .sentences
            .iter()
            .enumerate()
            .filter(|(_, s)| s.to_lowercase().contains(&key))
            .collect();
        match hits.get(self.lookup_cursor) {
            Some((i, s)) => {
                let out = format!("(Result {} / {}) {i}: {}", self.lookup_cursor + 1, hits.len(), s.trim());
                self.lookup_cursor += 1;
                out
            }
            None => "No more results.".into(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ReAct;

impl Strategy for ReAct {
    fn name(&self) -> &str {
        "react"
    }

    /// At most `max_iterations` model turns; no `Finish` by then is a blank.
    fn run(&self, record: &QuestionRecord, ctx: &RunContext<'_>) -> RunTranscript {
        let setting = ctx.params.setting;
        let mut t = RunTranscript::new(&record.id, self.name(), ctx.params);
        let titles = record
            .paragraphs
            .iter()
            .map(|p| p.title.as_str())
            .collect::<Vec<_>>()
            .join("; ");
        let mut tools = ReactTools::new(&record.paragraphs);
        let mut history = String::new();
        let mut output = FinalOutput::blank();
        for turn in 0..ctx.params.budgets.max_iterations {
            let slots = SlotMap::new()
                .with("paragraphs", titles.as_str())
                .with("question", record.question.as_str())
                .with("history", history.as_str());
            let prompt = match ctx.kit.render(Role::ReAct, setting, &slots) {
                Ok(p) => p.text,
                Err(e) => {
                    t.incomplete = Some(e.to_string());
                    return t;
                }
            };
            let started = Instant::now();
            let response = match ctx.model.call(Role::ReAct, &prompt) {
                Ok(r) => r.text,
                Err(e) => {
                    t.incomplete = Some(e.to_string());
                    return t;
                }
            };
            let parsed = ReactAction::parse(&response);
            let event = if parsed.is_some() {
                FsmEvent::ParseOk
            } else {
                FsmEvent::ParseFail
            };
            let mut entry = StepRecord::call(None, Role::ReAct, prompt, response.clone(), event, 0, started.elapsed());
            let Some((action, end)) = parsed else {
                let _ = std::fmt::Write::write_fmt(
                    &mut history,
                    format_args!("{}\nObservation {}: Invalid action.\n", response.trim(), turn + 1),
                );
                t.entries.push(entry.with_note("no action found"));
                continue;
            };
            let observation = match &action {
                ReactAction::Search(e) => tools.search(e),
                ReactAction::Lookup(k) => tools.lookup(k),
                ReactAction::Finish(payload) => {
                    let parsed = parse_text(SchemaKind::BaselineS2Out, payload);
                    if let Err(e) = &parsed {
                        entry = entry.with_note(e.to_string());
                    }
                    output = final_from(parsed.as_ref().ok(), setting);
                    t.entries.push(entry);
                    t.final_answer = Some(output.answer.clone());
                    t.output = Some(output);
                    return t;
                }
            };
            history.push_str(response[..end].trim());
            history.push_str(&format!("\nObservation {}: {observation}\n", turn + 1));
            t.entries.push(entry);
        }
        if let Some(e) = t.entries.last_mut() {
            e.note = Some("turn budget exhausted without Finish".into());
        }
        t.final_answer = Some(output.answer.clone());
        t.output = Some(output);
        t
    }
}
