use std::time::Instant;

use super::{RunContext, Strategy};
use crate::dataset::QuestionRecord;
use crate::fsm::FsmEvent;
use crate::parser::{parse_text, ParsedOutput, SchemaKind, Validated};
use crate::prompt::{format_paragraphs, Role, Setting, SlotMap};
use crate::transcript::{FinalOutput, RunTranscript, StepRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Direct,
    CoT,
    SPCoT,
}

impl BaselineKind {
    fn role(self) -> Role {
        match self {
            BaselineKind::Direct => Role::Direct,
            BaselineKind::CoT => Role::CoT,
            BaselineKind::SPCoT => Role::SPCoT,
        }
    }

    /// SP-CoT always asks for the full chain.
    fn schema(self, setting: Setting) -> SchemaKind {
        match (self, setting) {
            (BaselineKind::SPCoT, _) | (_, Setting::S2) => SchemaKind::BaselineS2Out,
            (_, Setting::S1) => SchemaKind::BaselineS1Out,
        }
    }
}

/// Single-prompt strategies: one call, no revisor. An unparseable response
/// scores as a blank answer.
#[derive(Debug, Clone)]
pub struct Baseline {
    kind: BaselineKind,
}

impl Baseline {
    pub fn new(kind: BaselineKind) -> Self {
        Self { kind }
    }
}

/// Final output from a parsed (or failed) answer object.
pub(crate) fn final_from(parsed: Option<&Validated>, setting: Setting) -> FinalOutput {
    match parsed.map(|v| (&v.output, v.is_strict())) {
        Some((
            ParsedOutput::Final {
                answer,
                supporting_facts,
                evidences,
                ..
            },
            strict,
        )) => FinalOutput {
            answer: answer.clone(),
            supporting_facts: supporting_facts.clone().filter(|_| setting == Setting::S2),
            evidences: evidences.clone().filter(|_| setting == Setting::S2),
            format_ok_strict: strict,
            format_ok_tolerant: true,
        },
        _ => FinalOutput::blank(),
    }
}

impl Strategy for Baseline {
    fn name(&self) -> &str {
        match self.kind {
            BaselineKind::Direct => "direct",
            BaselineKind::CoT => "cot",
            BaselineKind::SPCoT => "sp-cot",
        }
    }

    fn run(&self, record: &QuestionRecord, ctx: &RunContext<'_>) -> RunTranscript {
        let setting = ctx.params.setting;
        let mut t = RunTranscript::new(&record.id, self.name(), ctx.params);
        let slots = SlotMap::new()
            .with("paragraphs", format_paragraphs(&record.paragraphs))
            .with("question", record.question.as_str());
        let prompt = match ctx.kit.render(self.kind.role(), setting, &slots) {
            Ok(p) => p.text,
            Err(e) => {
                t.incomplete = Some(e.to_string());
                return t;
            }
        };
        let started = Instant::now();
        let response = match ctx.model.call(self.kind.role(), &prompt) {
            Ok(r) => r.text,
            Err(e) => {
                t.incomplete = Some(e.to_string());
                return t;
            }
        };
        let parsed = parse_text(self.kind.schema(setting), &response);
        let event = if parsed.is_ok() {
            FsmEvent::ParseOk
        } else {
            FsmEvent::ParseFail
        };
        let mut entry = StepRecord::call(None, self.kind.role(), prompt, response, event, 0, started.elapsed());
        if let Err(e) = &parsed {
            entry = entry.with_note(e.to_string());
        }
        t.entries.push(entry);
        let output = final_from(parsed.as_ref().ok(), setting);
        t.final_answer = Some(output.answer.clone());
        t.output = Some(output);
        t
    }
}
