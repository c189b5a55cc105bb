//! The per-run log: every state entry, prompt, raw response and parse
//! outcome. Transcripts are the unit of persistence and replay.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{SupportingFact, Triple};
use crate::fsm::{replay_step, FsmBudgets, FsmEvent, FsmState};
use crate::prompt::{Role, Setting};

pub const TRANSCRIPT_SCHEMA_VERSION: u32 = 1;

/// Short content hash used to spot edited or mismatched exchanges.
pub fn fingerprint(prompt: &str, response: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(prompt.as_bytes());
    hasher.update([0u8]);
    hasher.update(response.as_bytes());
    hex::encode(&hasher.finalize()[..8])
}

pub fn prompt_fingerprint(prompt: &str) -> String {
    hex::encode(&Sha256::digest(prompt.as_bytes())[..8])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub role: Role,
    pub prompt: String,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Machine state of the entry; `None` for baseline strategies.
    pub state: Option<FsmState>,
    /// Role of the prompt issued in this entry, if any.
    pub role: Option<Role>,
    /// `None` when the entry is a pure validation or bookkeeping step.
    pub prompt: Option<String>,
    pub raw_response: Option<String>,
    pub parse_outcome: FsmEvent,
    /// Revisor calls spent on the logical output this entry belongs to.
    pub revision_count: u32,
    /// Revisor exchanges made inside this entry (terminator and summarizer
    /// outputs, which have no revision edges of their own).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub revisions: Vec<Exchange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub wall_time: Duration,
}

impl StepRecord {
    pub fn validation(state: FsmState, event: FsmEvent, revision_count: u32) -> Self {
        Self {
            state: Some(state),
            role: None,
            prompt: None,
            raw_response: None,
            parse_outcome: event,
            revision_count,
            revisions: Vec::new(),
            fingerprint: None,
            note: None,
            wall_time: Duration::ZERO,
        }
    }

    pub fn call(
        state: Option<FsmState>,
        role: Role,
        prompt: String,
        response: String,
        event: FsmEvent,
        revision_count: u32,
        wall_time: Duration,
    ) -> Self {
        Self {
            fingerprint: Some(fingerprint(&prompt, &response)),
            state,
            role: Some(role),
            prompt: Some(prompt),
            raw_response: Some(response),
            parse_outcome: event,
            revision_count,
            revisions: Vec::new(),
            note: None,
            wall_time,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// All model exchanges of this entry in call order.
    pub fn exchanges(&self) -> Vec<Exchange> {
        let mut out = Vec::with_capacity(1 + self.revisions.len());
        if let (Some(role), Some(prompt), Some(response)) = (self.role, &self.prompt, &self.raw_response) {
            out.push(Exchange {
                role,
                prompt: prompt.clone(),
                response: response.clone(),
            });
        }
        out.extend(self.revisions.iter().cloned());
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubQuestionStep {
    pub index: u32,
    pub subquestion: String,
    pub paragraph_title: String,
    pub subanswer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<Triple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_id: Option<usize>,
    pub raw_exchanges: Vec<Exchange>,
}

/// The scored output of a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalOutput {
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supporting_facts: Option<Vec<SupportingFact>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidences: Option<Vec<Triple>>,
    pub format_ok_strict: bool,
    pub format_ok_tolerant: bool,
}

impl FinalOutput {
    /// Output of a run that produced nothing parseable.
    pub fn blank() -> Self {
        Self {
            answer: String::new(),
            supporting_facts: None,
            evidences: None,
            format_ok_strict: false,
            format_ok_tolerant: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminatorVariant {
    /// Ask whether the original question can be decomposed further.
    #[default]
    Continue,
    /// Ask whether question and sub-question are semantically identical;
    /// `continue = !identical`.
    Identical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunParams {
    pub setting: Setting,
    pub budgets: FsmBudgets,
    #[serde(default)]
    pub terminator: TerminatorVariant,
}

impl Default for RunParams {
    fn default() -> Self {
        Self {
            setting: Setting::S1,
            budgets: FsmBudgets::default(),
            terminator: TerminatorVariant::Continue,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTranscript {
    pub schema_version: u32,
    pub record_id: String,
    pub strategy: String,
    pub params: RunParams,
    pub entries: Vec<StepRecord>,
    pub steps: Vec<SubQuestionStep>,
    /// Searcher pass on the whole working question once the decomposer
    /// reports it simple. Supplies the final answer; not a sub-question.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closing: Option<SubQuestionStep>,
    /// Accept state for state-machine runs; `None` for baselines.
    pub terminal_state: Option<FsmState>,
    /// `Some("")` is the blank marker; `None` only for incomplete runs.
    pub final_answer: Option<String>,
    pub output: Option<FinalOutput>,
    /// Stage-one output preserved when stage two ran.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage1: Option<FinalOutput>,
    #[serde(default)]
    pub summarizer_failed: bool,
    /// Set when a transport failure aborted the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incomplete: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("state-machine path must start at Q0_Decompose, found {0:?}")]
    BadStart(Option<FsmState>),
    #[error("entry {index}: {from} --{event}--> {to:?} is not an edge")]
    BadEdge {
        index: usize,
        from: FsmState,
        event: FsmEvent,
        to: Option<FsmState>,
    },
    #[error("entry {0} has no state")]
    MissingState(usize),
    #[error("terminal state {0:?} is not an accept state")]
    NotAccepting(Option<FsmState>),
}

impl RunTranscript {
    pub fn new(record_id: &str, strategy: &str, params: RunParams) -> Self {
        Self {
            schema_version: TRANSCRIPT_SCHEMA_VERSION,
            record_id: record_id.to_string(),
            strategy: strategy.to_string(),
            params,
            entries: Vec::new(),
            steps: Vec::new(),
            closing: None,
            terminal_state: None,
            final_answer: None,
            output: None,
            stage1: None,
            summarizer_failed: false,
            incomplete: None,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.incomplete.is_none()
    }

    pub fn visited_states(&self) -> Vec<FsmState> {
        self.entries.iter().filter_map(|e| e.state).collect()
    }

    /// Fresh decomposition rounds: decomposer calls outside revision bounce-backs.
    pub fn decomposition_rounds(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| {
                e.state == Some(FsmState::Decompose)
                    && e.role == Some(Role::Decomposer)
                    && e.revision_count == 0
            })
            .count()
    }

    /// Replays the recorded events through the transition function (plus the
    /// documented withdrawal exits) and checks the result matches the
    /// recorded states and terminal state.
    pub fn check_path(&self) -> Result<(), PathError> {
        let Some(first) = self.entries.first() else {
            return match self.terminal_state {
                None => Ok(()),
                other => Err(PathError::BadStart(other)),
            };
        };
        if first.state != Some(FsmState::INITIAL) {
            return Err(PathError::BadStart(first.state));
        }
        for (i, entry) in self.entries.iter().enumerate() {
            let from = entry.state.ok_or(PathError::MissingState(i))?;
            let expected = if i + 1 < self.entries.len() {
                Some(self.entries[i + 1].state.ok_or(PathError::MissingState(i + 1))?)
            } else if self.is_complete() {
                self.terminal_state
            } else {
                continue;
            };
            let next = replay_step(from, entry.parse_outcome).ok();
            if next != expected {
                return Err(PathError::BadEdge {
                    index: i,
                    from,
                    event: entry.parse_outcome,
                    to: expected,
                });
            }
        }
        if self.is_complete() && !self.terminal_state.is_some_and(FsmState::is_accept) {
            return Err(PathError::NotAccepting(self.terminal_state));
        }
        Ok(())
    }

    /// Copy with timing fields zeroed, for equality checks across runs.
    pub fn without_timing(&self) -> Self {
        let mut copy = self.clone();
        for e in &mut copy.entries {
            e.wall_time = Duration::ZERO;
        }
        copy
    }

    /// Every model exchange in call order.
    pub fn exchanges(&self) -> Vec<Exchange> {
        self.entries.iter().flat_map(StepRecord::exchanges).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fsm(entries: Vec<(FsmState, FsmEvent)>, terminal: FsmState) -> RunTranscript {
        let mut t = RunTranscript::new("r", "sg-fsm1", RunParams::default());
        t.entries = entries
            .into_iter()
            .map(|(s, e)| StepRecord::validation(s, e, 0))
            .collect();
        t.terminal_state = Some(terminal);
        t
    }

    #[test]
    fn valid_single_hop_path() {
        use FsmEvent::*;
        use FsmState::*;
        let t = fsm(
            vec![
                (Decompose, ParseOk),
                (ReviseDecompose, ParseOk),
                (Search, SearchReturned),
                (ReviseSearch, ParseOk),
                (Terminate, StopDecomposition),
            ],
            AnswerFound,
        );
        assert_eq!(t.check_path(), Ok(()));
    }

    #[test]
    fn detects_bad_edge_and_start() {
        use FsmEvent::*;
        use FsmState::*;
        let t = fsm(vec![(Decompose, ParseOk), (Search, SearchReturned)], ReviseSearch);
        assert!(matches!(t.check_path(), Err(PathError::BadEdge { index: 0, .. })));
        let t = fsm(vec![(Search, SearchReturned)], ReviseSearch);
        assert!(matches!(t.check_path(), Err(PathError::BadStart(_))));
    }

    #[test]
    fn withdrawal_exit_accepted() {
        use FsmEvent::*;
        use FsmState::*;
        let t = fsm(
            vec![
                (Decompose, ParseOk),
                (ReviseDecompose, ParseOk),
                (Search, SearchReturned),
                (ReviseSearch, BudgetExceeded),
            ],
            EarlyWithdrawal,
        );
        assert_eq!(t.check_path(), Ok(()));
    }

    #[test]
    fn fingerprint_changes_with_response() {
        assert_ne!(fingerprint("p", "a"), fingerprint("p", "b"));
        assert_ne!(fingerprint("pa", ""), fingerprint("p", "a"));
        assert_eq!(fingerprint("p", "a").len(), 16);
    }
}
