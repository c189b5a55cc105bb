use std::fmt;

use serde::{Deserialize, Serialize};

use super::metrics::{answer_scores, normalize_answer, sup_scores};
use super::Prediction;
use crate::dataset::QuestionRecord;
use crate::fsm::FsmState;
use crate::prompt::Setting;
use crate::transcript::RunTranscript;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorCategory {
    Correct,
    FormatMismatch,
    HallucinationResponse,
    ErrorPropagation,
    LostInMiddle,
    Other,
    /// Wrong answer with no intermediate trace to inspect.
    Unclassified,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 7] = [
        ErrorCategory::Correct,
        ErrorCategory::FormatMismatch,
        ErrorCategory::HallucinationResponse,
        ErrorCategory::ErrorPropagation,
        ErrorCategory::LostInMiddle,
        ErrorCategory::Other,
        ErrorCategory::Unclassified,
    ];
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyConfig {
    /// Below this supporting-fact (or paragraph-title) F1 a correct answer
    /// counts as ungrounded.
    pub hallucination_threshold: f64,
    /// A sub-answer whose F1 against the gold hop answer falls below this
    /// conflicts with that hop.
    pub hop_match_threshold: f64,
}

impl Default for TaxonomyConfig {
    fn default() -> Self {
        Self {
            hallucination_threshold: 0.5,
            hop_match_threshold: 0.5,
        }
    }
}

/// Paragraph titles the prediction leaned on, in hop order.
fn trace_titles(pred: &Prediction, transcript: Option<&RunTranscript>) -> Vec<String> {
    if let Some(t) = transcript.filter(|t| !t.steps.is_empty()) {
        return t.steps.iter().map(|s| s.paragraph_title.clone()).collect();
    }
    let mut titles: Vec<String> = Vec::new();
    for f in pred.supporting_facts.iter().flatten() {
        if !titles.contains(&f.0) {
            titles.push(f.0.clone());
        }
    }
    titles
}

fn title_f1(pred: &[String], gold: &[String]) -> f64 {
    let p: std::collections::HashSet<String> = pred.iter().map(|t| normalize_answer(t)).collect();
    let g: std::collections::HashSet<String> = gold.iter().map(|t| normalize_answer(t)).collect();
    super::metrics::set_scores(&p, &g).f1
}

/// Heuristic assignment of one category per prediction. Rules apply in
/// order: format, hallucination, propagation, lost-in-middle.
pub fn classify_error(
    pred: &Prediction,
    transcript: Option<&RunTranscript>,
    record: &QuestionRecord,
    config: &TaxonomyConfig,
) -> ErrorCategory {
    if !pred.format_ok_tolerant || pred.terminal_state == Some(FsmState::EarlyWithdrawal) {
        return ErrorCategory::FormatMismatch;
    }
    let correct = answer_scores(&pred.answer, &record.gold_answer).em == 1.0;
    let titles = trace_titles(pred, transcript);
    let gold_titles = record.gold_titles();

    if correct {
        if let (Some(facts), Some(gold)) = (&pred.supporting_facts, &record.gold_supporting_facts) {
            if sup_scores(facts, gold).f1 < config.hallucination_threshold {
                return ErrorCategory::HallucinationResponse;
            }
        } else if pred.supporting_facts.is_none() && pred.setting == Setting::S2 {
            return ErrorCategory::HallucinationResponse;
        }
        if let Some(gold) = &gold_titles {
            if !titles.is_empty() && title_f1(&titles, gold) < config.hallucination_threshold {
                return ErrorCategory::HallucinationResponse;
            }
        }
        return ErrorCategory::Correct;
    }

    let steps = transcript.map(|t| t.steps.as_slice()).unwrap_or_default();
    if steps.is_empty() && titles.is_empty() {
        return ErrorCategory::Unclassified;
    }
    let mut checked = false;
    if let Some(hops) = &record.gold_decomposition {
        checked = true;
        for (step, hop) in steps.iter().zip(hops) {
            let s = answer_scores(&step.subanswer, &hop.answer);
            if s.em == 0.0 && s.f1 < config.hop_match_threshold {
                return ErrorCategory::ErrorPropagation;
            }
        }
    }
    if let (Some(first), Some(gold)) = (titles.first(), &gold_titles) {
        checked = true;
        let first = normalize_answer(first);
        if !gold.iter().any(|g| normalize_answer(g) == first) {
            return ErrorCategory::ErrorPropagation;
        }
    }
    if checked {
        ErrorCategory::LostInMiddle
    } else {
        ErrorCategory::Other
    }
}
