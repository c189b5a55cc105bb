//! States, events and the transition function of the self-guiding state machine.
//!
//! The machine has eight states. `Decompose` is the initial state and
//! `AnswerFound`, `Summarized` and `EarlyWithdrawal` are the accept states.
//! [`transition`] is a pure lookup over the fixed edge table; anything
//! outside that table is an [`UndefinedTransition`], which always indicates
//! an engine bug.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FsmState {
    /// q0: ask the decomposer for the next sub-question.
    #[serde(rename = "Q0_Decompose")]
    Decompose,
    /// q1: validate (and if needed repair) the decomposer output.
    #[serde(rename = "Q1_ReviseDecompose")]
    ReviseDecompose,
    /// q2: search the candidate paragraphs for the sub-answer.
    #[serde(rename = "Q2_Search")]
    Search,
    /// q3: validate (and if needed repair) the searcher output.
    #[serde(rename = "Q3_ReviseSearch")]
    ReviseSearch,
    /// q4: decide whether decomposition continues.
    #[serde(rename = "Q4_Terminate")]
    Terminate,
    /// q5: stage one finished with an answer.
    #[serde(rename = "Q5_AnswerFound")]
    AnswerFound,
    /// q6: stage two summarized and re-checked the answer.
    #[serde(rename = "Q6_Summarized")]
    Summarized,
    /// q7: budget exhausted or irreparable output; the answer is blank.
    #[serde(rename = "Q7_EarlyWithdrawal")]
    EarlyWithdrawal,
}

impl FsmState {
    pub const ALL: [FsmState; 8] = [
        FsmState::Decompose,
        FsmState::ReviseDecompose,
        FsmState::Search,
        FsmState::ReviseSearch,
        FsmState::Terminate,
        FsmState::AnswerFound,
        FsmState::Summarized,
        FsmState::EarlyWithdrawal,
    ];

    pub const INITIAL: FsmState = FsmState::Decompose;

    pub fn is_accept(self) -> bool {
        matches!(
            self,
            FsmState::AnswerFound | FsmState::Summarized | FsmState::EarlyWithdrawal
        )
    }

    /// Index in `q0..q7` numbering.
    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            FsmState::Decompose => "Q0_Decompose",
            FsmState::ReviseDecompose => "Q1_ReviseDecompose",
            FsmState::Search => "Q2_Search",
            FsmState::ReviseSearch => "Q3_ReviseSearch",
            FsmState::Terminate => "Q4_Terminate",
            FsmState::AnswerFound => "Q5_AnswerFound",
            FsmState::Summarized => "Q6_Summarized",
            FsmState::EarlyWithdrawal => "Q7_EarlyWithdrawal",
        }
    }
}

impl fmt::Display for FsmState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FsmEvent {
    ParseOk,
    ParseFail,
    BudgetExceeded,
    ContinueDecomposition,
    StopDecomposition,
    SearchReturned,
    SummaryReturned,
}

impl FsmEvent {
    pub const ALL: [FsmEvent; 7] = [
        FsmEvent::ParseOk,
        FsmEvent::ParseFail,
        FsmEvent::BudgetExceeded,
        FsmEvent::ContinueDecomposition,
        FsmEvent::StopDecomposition,
        FsmEvent::SearchReturned,
        FsmEvent::SummaryReturned,
    ];
}

impl fmt::Display for FsmEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("undefined transition from {state} on {event}")]
pub struct UndefinedTransition {
    pub state: FsmState,
    pub event: FsmEvent,
}

/// The transition function. Pure; defined on exactly eleven edges.
pub fn transition(state: FsmState, event: FsmEvent) -> Result<FsmState, UndefinedTransition> {
    use FsmEvent::*;
    use FsmState::*;
    let next = match (state, event) {
        (Decompose, ParseOk) => ReviseDecompose,
        (Decompose, BudgetExceeded) => EarlyWithdrawal,
        (Decompose, ParseFail) => Decompose,
        (ReviseDecompose, ParseOk) => Search,
        (ReviseDecompose, ParseFail) => Decompose,
        (Search, SearchReturned) => ReviseSearch,
        (ReviseSearch, ParseOk) => Terminate,
        (ReviseSearch, ParseFail) => Search,
        (Terminate, ContinueDecomposition) => Decompose,
        (Terminate, StopDecomposition) => AnswerFound,
        (AnswerFound, SummaryReturned) => Summarized,
        _ => return Err(UndefinedTransition { state, event }),
    };
    Ok(next)
}

/// Early withdrawal from a working state that has no budget edge of its own.
///
/// The search-validation and terminator states have no route to `q7` in the
/// transition table, yet an irreparable output there must still end the run.
/// The engine records such exits with `BudgetExceeded` and path checks accept
/// them through this function; [`transition`] itself is left untouched.
pub fn withdraw(state: FsmState, event: FsmEvent) -> Option<FsmState> {
    match (state, event) {
        (FsmState::ReviseSearch | FsmState::Terminate, FsmEvent::BudgetExceeded) => {
            Some(FsmState::EarlyWithdrawal)
        }
        _ => None,
    }
}

/// Successor used when replaying a recorded path: the transition table plus
/// the documented withdrawal exits.
pub fn replay_step(state: FsmState, event: FsmEvent) -> Result<FsmState, UndefinedTransition> {
    transition(state, event).or_else(|err| withdraw(state, event).ok_or(err))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FsmBudgets {
    /// Fresh decomposition rounds allowed before withdrawal.
    pub max_iterations: u32,
    /// Revisor calls allowed per logical model output.
    pub max_revisions_per_output: u32,
}

impl Default for FsmBudgets {
    fn default() -> Self {
        Self {
            max_iterations: 6,
            max_revisions_per_output: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("max_iterations must be at least 1")]
pub struct InvalidBudgets;

impl FsmBudgets {
    pub fn new(max_iterations: u32, max_revisions_per_output: u32) -> Result<Self, InvalidBudgets> {
        let budgets = Self {
            max_iterations,
            max_revisions_per_output,
        };
        budgets.validate()?;
        Ok(budgets)
    }

    pub fn validate(&self) -> Result<(), InvalidBudgets> {
        if self.max_iterations == 0 {
            return Err(InvalidBudgets);
        }
        Ok(())
    }

    /// Upper bound on parse attempts for a single output.
    pub fn max_attempts(&self) -> u32 {
        1 + self.max_revisions_per_output
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_states_and_three_accepting() {
        assert_eq!(FsmState::ALL.len(), 8);
        let accepting: Vec<_> = FsmState::ALL.iter().filter(|s| s.is_accept()).collect();
        assert_eq!(
            accepting,
            vec![
                &FsmState::AnswerFound,
                &FsmState::Summarized,
                &FsmState::EarlyWithdrawal
            ]
        );
        assert_eq!(FsmState::INITIAL, FsmState::Decompose);
        for (i, s) in FsmState::ALL.iter().enumerate() {
            assert_eq!(s.ordinal(), i);
        }
    }

    #[test]
    fn worked_edges() {
        assert_eq!(
            transition(FsmState::Decompose, FsmEvent::ParseOk),
            Ok(FsmState::ReviseDecompose)
        );
        assert_eq!(
            transition(FsmState::Terminate, FsmEvent::StopDecomposition),
            Ok(FsmState::AnswerFound)
        );
        assert_eq!(
            transition(FsmState::ReviseSearch, FsmEvent::ParseFail),
            Ok(FsmState::Search)
        );
    }

    #[test]
    fn summarized_has_no_successor() {
        for event in FsmEvent::ALL {
            assert!(transition(FsmState::Summarized, event).is_err());
            assert!(transition(FsmState::EarlyWithdrawal, event).is_err());
        }
    }

    #[test]
    fn withdrawal_only_from_search_validation_and_terminator() {
        for state in FsmState::ALL {
            for event in FsmEvent::ALL {
                let expected = matches!(
                    (state, event),
                    (FsmState::ReviseSearch | FsmState::Terminate, FsmEvent::BudgetExceeded)
                );
                assert_eq!(withdraw(state, event).is_some(), expected, "{state} {event}");
            }
        }
    }

    #[test]
    fn serde_labels() {
        let json = serde_json::to_string(&FsmState::EarlyWithdrawal).unwrap();
        assert_eq!(json, "\"Q7_EarlyWithdrawal\"");
        for s in FsmState::ALL {
            let j = serde_json::to_string(&s).unwrap();
            assert_eq!(j, format!("\"{}\"", s.label()));
        }
    }

    #[test]
    fn budgets() {
        assert!(FsmBudgets::new(0, 2).is_err());
        let b = FsmBudgets::new(1, 0).unwrap();
        assert_eq!(b.max_attempts(), 1);
        assert_eq!(FsmBudgets::default().max_attempts(), 3);
    }
}
