//! The two-stage state-machine strategy.
//!
//! Stage one walks the transition table: decompose (Q0), validate (Q1),
//! search (Q2), validate (Q3), judge (Q4). Validation states issue no model
//! call unless the output is broken, in which case the run bounces back to
//! the producing state and the revisor rewrites the latest text. Stage two
//! asks the summarizer to re-check the chain from Q5 and lands in Q6.

use std::fmt::Write;
use std::time::Instant;

use super::baseline::final_from;
use super::{RunContext, Strategy};
use crate::dataset::{QuestionRecord, SupportingFact};
use crate::fsm::{replay_step, FsmEvent, FsmState};
use crate::gateway::GatewayError;
use crate::parser::{extract_json, parse_text, parse_with_repair, ParsedOutput, SchemaKind};
use crate::prompt::{format_paragraphs, render_summarizer, Role, Setting, SlotMap, SummarizerInput};
use crate::transcript::{
    Exchange, FinalOutput, RunTranscript, StepRecord, SubQuestionStep, TerminatorVariant,
};

#[derive(Debug, Clone)]
pub struct SgFsm {
    summarize: bool,
}

impl SgFsm {
    pub fn stage1() -> Self {
        Self { summarize: false }
    }

    pub fn stage2() -> Self {
        Self { summarize: true }
    }
}

impl Strategy for SgFsm {
    fn name(&self) -> &str {
        if self.summarize {
            "sg-fsm2"
        } else {
            "sg-fsm1"
        }
    }

    fn run(&self, record: &QuestionRecord, ctx: &RunContext<'_>) -> RunTranscript {
        let t = run_fsm1(record, ctx);
        if self.summarize {
            run_fsm2(t, record, ctx)
        } else {
            t
        }
    }
}

/// Context appended to the decomposer and terminator prompts for each
/// answered sub-question.
fn history_suffix(steps: &[SubQuestionStep]) -> String {
    let mut out = String::new();
    for s in steps {
        let _ = write!(out, " — where \"{}\" has answer \"{}\"", s.subquestion, s.subanswer);
    }
    out
}

struct Engine<'r, 'c, 'k> {
    record: &'r QuestionRecord,
    ctx: &'c RunContext<'k>,
    t: RunTranscript,
}

/// Mutable per-run bookkeeping for the stage-one walk.
#[derive(Default)]
struct Walk {
    rounds: u32,
    /// Latest text of the output under validation.
    latest: String,
    /// Revisor calls spent on that output.
    revisions: u32,
    /// Next entry of the producing state is a revisor bounce-back.
    bounce: bool,
    /// Revisions exhausted while validating the decomposition.
    exhausted: bool,
    simple: bool,
    subquestion: String,
    hop: Vec<Exchange>,
    /// Whether the answer-bearing output parsed with canonical keys.
    answer_strict: bool,
}

impl Engine<'_, '_, '_> {
    fn setting(&self) -> Setting {
        self.ctx.params.setting
    }

    fn call(&self, role: Role, prompt: &str) -> Result<String, GatewayError> {
        Ok(self.ctx.model.call(role, prompt)?.text)
    }

    fn push(&mut self, entry: StepRecord) {
        self.t.entries.push(entry);
    }

    fn working_question(&self) -> String {
        format!("{}{}", self.record.question, history_suffix(&self.t.steps))
    }

    fn render(&self, role: Role, slots: &SlotMap) -> String {
        self.ctx
            .kit
            .render(role, self.setting(), slots)
            .expect("built-in role templates cover every slot the engine fills")
            .text
    }

    /// Produces (or repairs) the output of a producing state. Returns the
    /// entry so the caller can set its event.
    fn produce(&mut self, w: &mut Walk, state: FsmState, role: Role, prompt: impl FnOnce(&Self) -> String) -> Result<StepRecord, GatewayError> {
        let started = Instant::now();
        let (role, prompt) = if w.bounce {
            w.revisions += 1;
            (Role::Revisor, self.ctx.kit.revisor(&w.latest).text)
        } else {
            (role, prompt(self))
        };
        let response = self.call(role, &prompt)?;
        w.latest = response.clone();
        w.hop.push(Exchange {
            role,
            prompt: prompt.clone(),
            response: response.clone(),
        });
        Ok(StepRecord::call(
            Some(state),
            role,
            prompt,
            response,
            FsmEvent::SearchReturned,
            w.revisions,
            started.elapsed(),
        ))
    }

    /// Event for a failed validation: retry through the revisor while the
    /// budget lasts.
    fn on_failure(&self, w: &mut Walk) -> bool {
        if w.revisions < self.ctx.params.budgets.max_revisions_per_output {
            w.bounce = true;
            true
        } else {
            false
        }
    }

    fn fresh_output(w: &mut Walk) {
        w.revisions = 0;
        w.bounce = false;
    }

    fn searcher_schema(&self) -> SchemaKind {
        match self.setting() {
            Setting::S1 => SchemaKind::SearcherOutS1,
            Setting::S2 => SchemaKind::SearcherOutS2,
        }
    }

    fn drive(&mut self) -> Result<FsmState, GatewayError> {
        let budgets = self.ctx.params.budgets;
        let mut w = Walk::default();
        let mut state = FsmState::INITIAL;
        while !state.is_accept() {
            let (entry, event) = match state {
                FsmState::Decompose => self.decompose(&mut w)?,
                FsmState::ReviseDecompose => {
                    let started = Instant::now();
                    match parse_text(SchemaKind::DecomposerOut, &w.latest) {
                        Ok(v) => {
                            let ParsedOutput::Decomposition { simple, subquestion } = v.output else {
                                unreachable!("decomposer schema yields a decomposition")
                            };
                            w.simple = simple;
                            w.subquestion = subquestion.unwrap_or_else(|| self.working_question());
                            let e = StepRecord::validation(state, FsmEvent::ParseOk, w.revisions);
                            Self::fresh_output(&mut w);
                            (timed(e, started), FsmEvent::ParseOk)
                        }
                        Err(f) => {
                            if !self.on_failure(&mut w) {
                                w.exhausted = true;
                            }
                            let e = StepRecord::validation(state, FsmEvent::ParseFail, w.revisions).with_note(f.to_string());
                            (timed(e, started), FsmEvent::ParseFail)
                        }
                    }
                }
                FsmState::Search => {
                    let paragraphs = format_paragraphs(&self.record.paragraphs);
                    let sub = w.subquestion.clone();
                    let e = self.produce(&mut w, state, Role::Searcher, |me| {
                        me.render(
                            Role::Searcher,
                            &SlotMap::new().with("subquestion", sub).with("paragraphs", paragraphs),
                        )
                    })?;
                    (e, FsmEvent::SearchReturned)
                }
                FsmState::ReviseSearch => {
                    let started = Instant::now();
                    match parse_text(self.searcher_schema(), &w.latest) {
                        Ok(v) => {
                            let strict = v.is_strict();
                            let ParsedOutput::SearchHit {
                                paragraph_title,
                                answer,
                                evidence,
                                sentence_id,
                                ..
                            } = v.output
                            else {
                                unreachable!("searcher schema yields a search hit")
                            };
                            let step = SubQuestionStep {
                                index: self.t.steps.len() as u32 + 1,
                                subquestion: w.subquestion.clone(),
                                paragraph_title: paragraph_title.unwrap_or_default(),
                                subanswer: answer,
                                evidence,
                                sentence_id,
                                raw_exchanges: std::mem::take(&mut w.hop),
                            };
                            w.answer_strict = strict;
                            if w.simple {
                                self.t.closing = Some(step);
                            } else {
                                self.t.steps.push(step);
                            }
                            let e = StepRecord::validation(state, FsmEvent::ParseOk, w.revisions);
                            Self::fresh_output(&mut w);
                            (timed(e, started), FsmEvent::ParseOk)
                        }
                        Err(f) => {
                            let event = if self.on_failure(&mut w) {
                                FsmEvent::ParseFail
                            } else {
                                FsmEvent::BudgetExceeded
                            };
                            let e = StepRecord::validation(state, event, w.revisions).with_note(f.to_string());
                            (timed(e, started), event)
                        }
                    }
                }
                FsmState::Terminate => self.terminate(&w)?,
                _ => unreachable!("loop exits on accept states"),
            };
            let mut entry = entry;
            entry.parse_outcome = event;
            self.push(entry);
            state = replay_step(state, event).expect("engine emits only table or withdrawal edges");
            debug_assert!(w.rounds <= budgets.max_iterations);
        }
        if state == FsmState::AnswerFound {
            self.t.output = Some(self.stage1_output(w.answer_strict));
        }
        Ok(state)
    }

    fn decompose(&mut self, w: &mut Walk) -> Result<(StepRecord, FsmEvent), GatewayError> {
        let budgets = self.ctx.params.budgets;
        if w.exhausted {
            let e = StepRecord::validation(FsmState::Decompose, FsmEvent::BudgetExceeded, w.revisions)
                .with_note("revisions exhausted");
            return Ok((e, FsmEvent::BudgetExceeded));
        }
        if !w.bounce {
            if w.rounds == budgets.max_iterations {
                let e = StepRecord::validation(FsmState::Decompose, FsmEvent::BudgetExceeded, 0)
                    .with_note("iteration budget exhausted");
                return Ok((e, FsmEvent::BudgetExceeded));
            }
            w.rounds += 1;
            w.hop.clear();
            w.simple = false;
        }
        let history = history_suffix(&self.t.steps);
        let question = self.record.question.clone();
        let entry = self.produce(w, FsmState::Decompose, Role::Decomposer, |me| {
            me.render(
                Role::Decomposer,
                &SlotMap::new().with("question", question).with("history", history),
            )
        })?;
        let event = match extract_json(&w.latest) {
            Ok(_) => FsmEvent::ParseOk,
            Err(_) if self.on_failure(w) => FsmEvent::ParseFail,
            Err(_) => FsmEvent::BudgetExceeded,
        };
        if event == FsmEvent::ParseOk {
            // The decomposition's own validation in Q1 may still bounce back.
            w.bounce = false;
        }
        Ok((entry, event))
    }

    fn terminate(&mut self, w: &Walk) -> Result<(StepRecord, FsmEvent), GatewayError> {
        let started = Instant::now();
        if w.simple {
            let e = StepRecord::validation(FsmState::Terminate, FsmEvent::StopDecomposition, 0)
                .with_note("decomposer reported a simple question");
            return Ok((e, FsmEvent::StopDecomposition));
        }
        let (role, schema, slots) = match self.ctx.params.terminator {
            TerminatorVariant::Continue => (
                Role::Terminator,
                SchemaKind::TerminatorOut,
                SlotMap::new()
                    .with("question", self.record.question.as_str())
                    .with("subquestion", w.subquestion.as_str())
                    .with("history", history_suffix(&self.t.steps)),
            ),
            TerminatorVariant::Identical => (
                Role::TerminatorIdentical,
                SchemaKind::TerminatorIdenticalOut,
                SlotMap::new()
                    .with("question", self.record.question.as_str())
                    .with("subquestion", w.subquestion.as_str()),
            ),
        };
        let prompt = self.render(role, &slots);
        let response = self.call(role, &prompt)?;
        let parsed = parse_with_repair(schema, &response, self.ctx.kit, self.ctx.model, &self.ctx.params.budgets)?;
        let event = match parsed.output() {
            Some(ParsedOutput::Continue { proceed: true }) => FsmEvent::ContinueDecomposition,
            Some(_) => FsmEvent::StopDecomposition,
            None => FsmEvent::BudgetExceeded,
        };
        let mut e = StepRecord::call(
            Some(FsmState::Terminate),
            role,
            prompt,
            response,
            event,
            parsed.revisions.len() as u32,
            started.elapsed(),
        );
        e.revisions = parsed.revisions;
        if let Err(f) = &parsed.outcome {
            e = e.with_note(f.to_string());
        }
        Ok((e, event))
    }

    fn answer_steps(&self) -> impl Iterator<Item = &SubQuestionStep> {
        self.t.steps.iter().chain(self.t.closing.as_ref())
    }

    fn stage1_output(&self, strict: bool) -> FinalOutput {
        let answer = self
            .t
            .closing
            .as_ref()
            .or(self.t.steps.last())
            .map(|s| s.subanswer.clone())
            .unwrap_or_default();
        let (facts, evidences) = match self.setting() {
            Setting::S1 => (None, None),
            Setting::S2 => {
                let mut facts: Vec<SupportingFact> = Vec::new();
                for s in self.answer_steps() {
                    if let Some(i) = s.sentence_id {
                        let f = SupportingFact(s.paragraph_title.clone(), i);
                        if !facts.contains(&f) {
                            facts.push(f);
                        }
                    }
                }
                let evidences = self.answer_steps().filter_map(|s| s.evidence.clone()).collect();
                (Some(facts), Some(evidences))
            }
        };
        FinalOutput {
            answer,
            supporting_facts: facts,
            evidences,
            format_ok_strict: strict,
            format_ok_tolerant: true,
        }
    }
}

fn timed(mut e: StepRecord, started: Instant) -> StepRecord {
    e.wall_time = started.elapsed();
    e
}

/// Stage one: the decompose/search/judge loop from Q0 to Q5 or Q7.
pub fn run_fsm1(record: &QuestionRecord, ctx: &RunContext<'_>) -> RunTranscript {
    let mut engine = Engine {
        record,
        ctx,
        t: RunTranscript::new(&record.id, "sg-fsm1", ctx.params),
    };
    match engine.drive() {
        Ok(terminal) => {
            engine.t.terminal_state = Some(terminal);
            if terminal == FsmState::EarlyWithdrawal {
                engine.t.output = Some(FinalOutput::blank());
            }
            engine.t.final_answer = engine.t.output.as_ref().map(|o| o.answer.clone());
        }
        Err(e) => {
            log::warn!("record {}: run aborted: {e}", record.id);
            engine.t.incomplete = Some(e.to_string());
        }
    }
    engine.t
}

/// Stage two: summarizer re-check from Q5. Runs that did not reach Q5 pass
/// through with only the strategy label changed.
pub fn run_fsm2(fsm1: RunTranscript, record: &QuestionRecord, ctx: &RunContext<'_>) -> RunTranscript {
    let mut t = fsm1;
    t.strategy = "sg-fsm2".into();
    if t.terminal_state != Some(FsmState::AnswerFound) || !t.is_complete() {
        return t;
    }
    let setting = t.params.setting;
    let stage1 = t.output.clone().unwrap_or_else(FinalOutput::blank);
    let steps: Vec<SubQuestionStep> = if t.steps.is_empty() {
        t.closing.iter().cloned().collect()
    } else {
        t.steps.clone()
    };
    let input = SummarizerInput {
        question: &record.question,
        stage1_answer: &stage1.answer,
        steps: &steps,
        paragraphs: &record.paragraphs,
    };
    let prompt = match render_summarizer(ctx.kit, setting, &input) {
        Ok(p) => p.text,
        Err(e) => {
            t.incomplete = Some(e.to_string());
            return t;
        }
    };
    let started = Instant::now();
    let outcome = ctx.model.call(Role::Summarizer, &prompt).and_then(|r| {
        let schema = match setting {
            Setting::S1 => SchemaKind::SummarizerOutS1,
            Setting::S2 => SchemaKind::FinalS2Out,
        };
        let parsed = parse_with_repair(schema, &r.text, ctx.kit, ctx.model, &t.params.budgets)?;
        Ok((r.text, parsed))
    });
    let (response, parsed) = match outcome {
        Ok(x) => x,
        Err(e) => {
            log::warn!("record {}: summarizer aborted: {e}", record.id);
            t.incomplete = Some(e.to_string());
            return t;
        }
    };
    let mut entry = StepRecord::call(
        Some(FsmState::AnswerFound),
        Role::Summarizer,
        prompt,
        response,
        FsmEvent::SummaryReturned,
        parsed.revisions.len() as u32,
        started.elapsed(),
    );
    entry.revisions = parsed.revisions.clone();
    let output = match (&parsed.outcome, setting) {
        (Ok(v), Setting::S1) => FinalOutput {
            answer: v.output.answer().unwrap_or_default().to_string(),
            supporting_facts: None,
            evidences: None,
            format_ok_strict: v.is_strict(),
            format_ok_tolerant: true,
        },
        (Ok(v), Setting::S2) => final_from(Some(v), setting),
        (Err(f), _) => {
            entry = entry.with_note(format!("summarizer output unusable, keeping stage-one answer: {f}"));
            t.summarizer_failed = true;
            stage1.clone()
        }
    };
    t.entries.push(entry);
    t.terminal_state = replay_step(FsmState::AnswerFound, FsmEvent::SummaryReturned).ok();
    t.final_answer = Some(output.answer.clone());
    t.output = Some(output);
    t.stage1 = Some(stage1);
    t
}
