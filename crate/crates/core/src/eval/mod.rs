//! Answer, supporting-fact and evidence scoring, the format metric, error
//! taxonomy, and report aggregation.

mod metrics;
mod report;
mod taxonomy;

use serde::{Deserialize, Serialize};

use crate::dataset::{QuestionRecord, SupportingFact, Triple};
use crate::fsm::FsmState;
use crate::prompt::Setting;
use crate::transcript::{FinalOutput, RunTranscript};

pub use metrics::{
    answer_scores, classical_joint, joint_scores, joint_scores_fuzzy, normalize_answer, set_scores, sup_scores,
    AnswerScore, SetScore,
};
pub use report::{aggregate, format_rate, render_table, Mean, MetricsReport};
pub use taxonomy::{classify_error, ErrorCategory, TaxonomyConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub record_id: String,
    pub strategy: String,
    pub setting: Setting,
    /// Empty string is the blank marker.
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supporting_facts: Option<Vec<SupportingFact>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidences: Option<Vec<Triple>>,
    pub format_ok_strict: bool,
    pub format_ok_tolerant: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal_state: Option<FsmState>,
}

impl Prediction {
    pub fn from_output(
        record_id: &str,
        strategy: &str,
        setting: Setting,
        output: &FinalOutput,
        terminal_state: Option<FsmState>,
    ) -> Self {
        Self {
            record_id: record_id.to_string(),
            strategy: strategy.to_string(),
            setting,
            answer: output.answer.clone(),
            supporting_facts: output.supporting_facts.clone(),
            evidences: output.evidences.clone(),
            format_ok_strict: output.format_ok_strict,
            format_ok_tolerant: output.format_ok_tolerant || output.format_ok_strict,
            terminal_state,
        }
    }

    pub fn from_transcript(t: &RunTranscript) -> Self {
        let blank = FinalOutput::blank();
        Self::from_output(
            &t.record_id,
            &t.strategy,
            t.params.setting,
            t.output.as_ref().unwrap_or(&blank),
            t.terminal_state,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub record_id: String,
    pub ans_em: f64,
    pub ans_f1: f64,
    pub ans_precision: f64,
    pub ans_recall: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_em: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_f1: Option<f64>,
    /// Evidence-triple joint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_em: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_f1: Option<f64>,
    /// Triple joint ignoring the relation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_fuzzy_f1: Option<f64>,
    /// Answer x supporting-fact product.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classic_joint_em: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classic_joint_f1: Option<f64>,
    pub format_ok_strict: bool,
    pub format_ok_tolerant: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_category: Option<ErrorCategory>,
}

/// Scores one prediction. Setting-2 columns are filled only where the
/// record carries the matching gold annotation.
pub fn score_sample(
    pred: &Prediction,
    record: &QuestionRecord,
    transcript: Option<&RunTranscript>,
    taxonomy: &TaxonomyConfig,
) -> SampleScore {
    let ans = answer_scores(&pred.answer, &record.gold_answer);
    let mut score = SampleScore {
        record_id: pred.record_id.clone(),
        ans_em: ans.em,
        ans_f1: ans.f1,
        ans_precision: ans.precision,
        ans_recall: ans.recall,
        sup_em: None,
        sup_f1: None,
        joint_em: None,
        joint_f1: None,
        joint_fuzzy_f1: None,
        classic_joint_em: None,
        classic_joint_f1: None,
        format_ok_strict: pred.format_ok_strict,
        format_ok_tolerant: pred.format_ok_tolerant,
        error_category: Some(classify_error(pred, transcript, record, taxonomy)),
    };
    if pred.setting == Setting::S2 {
        if let Some(gold) = &record.gold_supporting_facts {
            let sup = sup_scores(pred.supporting_facts.as_deref().unwrap_or_default(), gold);
            let (em, f1) = classical_joint(&ans, &sup);
            score.sup_em = Some(sup.em);
            score.sup_f1 = Some(sup.f1);
            score.classic_joint_em = Some(em);
            score.classic_joint_f1 = Some(f1);
        }
        if let Some(gold) = &record.gold_evidences {
            let pred_ev = pred.evidences.as_deref().unwrap_or_default();
            let joint = joint_scores(pred_ev, gold);
            score.joint_em = Some(joint.em);
            score.joint_f1 = Some(joint.f1);
            score.joint_fuzzy_f1 = Some(joint_scores_fuzzy(pred_ev, gold).f1);
        }
    }
    score
}
