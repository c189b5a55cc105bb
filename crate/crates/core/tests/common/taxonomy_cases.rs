//! Hand-built error-taxonomy cases: (name, expected, prediction, trace, record).

use fsmqa_core::dataset::{load, DatasetKind, QuestionRecord, SupportingFact};
use fsmqa_core::eval::{ErrorCategory, Prediction};
use fsmqa_core::fsm::FsmState;
use fsmqa_core::prompt::Setting;
use fsmqa_core::transcript::{RunParams, RunTranscript, SubQuestionStep};

use super::data;
use ErrorCategory::*;

pub type Case = (&'static str, ErrorCategory, P, Option<RunTranscript>, QuestionRecord);

fn musique() -> QuestionRecord {
    load(&data("musique_fixture.jsonl"), DatasetKind::Musique).unwrap().remove(0)
}

fn hotpot() -> QuestionRecord {
    load(&data("hotpot_fixture.json"), DatasetKind::HotpotQA).unwrap().remove(1)
}

fn twowiki() -> QuestionRecord {
    super::blind_shaft()
}

fn bare(mut r: QuestionRecord) -> QuestionRecord {
    r.gold_supporting_facts = None;
    r.gold_paragraphs = None;
    r.gold_decomposition = None;
    r
}

pub struct P(pub Prediction);

impl P {
    fn new(setting: Setting, answer: &str) -> Self {
        P(Prediction {
            record_id: "r".into(),
            strategy: "s".into(),
            setting,
            answer: answer.into(),
            supporting_facts: None,
            evidences: None,
            format_ok_strict: true,
            format_ok_tolerant: true,
            terminal_state: None,
        })
    }
    fn s1(answer: &str) -> Self {
        Self::new(Setting::S1, answer)
    }
    fn s2(answer: &str, facts: &[(&str, usize)]) -> Self {
        let mut p = Self::new(Setting::S2, answer);
        p.0.supporting_facts = Some(facts.iter().map(|(t, i)| SupportingFact(t.to_string(), *i)).collect());
        p
    }
    fn s2_no_facts(answer: &str) -> Self {
        Self::new(Setting::S2, answer)
    }
    fn intolerant(mut self) -> Self {
        self.0.format_ok_strict = false;
        self.0.format_ok_tolerant = false;
        self
    }
    fn lenient(mut self) -> Self {
        self.0.format_ok_strict = false;
        self
    }
    fn state(mut self, s: FsmState) -> Self {
        self.0.terminal_state = Some(s);
        self
    }
}

fn trace(steps: &[(&str, &str)]) -> Option<RunTranscript> {
    let mut t = RunTranscript::new("r", "sg-fsm1", RunParams::default());
    t.steps = steps
        .iter()
        .enumerate()
        .map(|(i, (title, ans))| SubQuestionStep {
            index: i as u32 + 1,
            subquestion: format!("hop {}", i + 1),
            paragraph_title: title.to_string(),
            subanswer: ans.to_string(),
            evidence: None,
            sentence_id: None,
            raw_exchanges: Vec::new(),
        })
        .collect();
    Some(t)
}

const BERLIN: &str = "Berlin International Film Festival";
const FILLER: &str = "Musique filler 2hop__1_2 0";

pub fn cases() -> Vec<Case> {
    vec![
        ("unparseable output", FormatMismatch, P::s1("").intolerant(), None, musique()),
        ("withdrawn run", FormatMismatch, P::s1("").state(FsmState::EarlyWithdrawal), trace(&[]), musique()),
        ("format outranks correctness", FormatMismatch, P::s1("Delhi").intolerant(), None, hotpot()),
        ("plain correct", Correct, P::s1("Delhi"), None, hotpot()),
        ("correct with exact facts", Correct, P::s2("Delhi", &[("Oberoi family", 0), ("The Oberoi Group", 0)]), None, hotpot()),
        ("correct from distractors", HallucinationResponse, P::s2("Delhi", &[("Hotpot distractor 1 0", 0)]), None, hotpot()),
        ("correct without facts", HallucinationResponse, P::s2_no_facts("Delhi"), None, hotpot()),
        ("facts at threshold", Correct, P::s2("Delhi", &[("Oberoi family", 0), ("Hotpot distractor 1 2", 1)]), None, hotpot()),
        ("one of two facts", Correct, P::s2("delhi.", &[("The Oberoi Group", 0)]), None, hotpot()),
        ("correct gold trace", Correct, P::s1("Li Yang"), trace(&[(BERLIN, "Blind Shaft"), ("Blind Shaft", "Li Yang")]), musique()),
        ("correct off-gold trace", HallucinationResponse, P::s1("Li Yang"), trace(&[(FILLER, "x"), ("Musique filler 2hop__1_2 4", "Li Yang")]), musique()),
        (
            "trace mostly distractors",
            HallucinationResponse,
            P::s1("li yang"),
            trace(&[(BERLIN, "Blind Shaft"), (FILLER, "a"), ("Musique filler 2hop__1_2 5", "Li Yang")]),
            musique(),
        ),
        ("partial gold trace", Correct, P::s1("Li Yang"), trace(&[("Blind Shaft", "Li Yang")]), musique()),
        ("wrong, no trace", Unclassified, P::s1("Zhang Yimou"), None, musique()),
        ("wrong baseline", Unclassified, P::s1("Mumbai"), None, hotpot()),
        ("second hop wrong", ErrorPropagation, P::s1("Zhang Yimou"), trace(&[(BERLIN, "Blind Shaft"), ("Blind Shaft", "Zhang Yimou")]), musique()),
        ("first hop wrong", ErrorPropagation, P::s1("Zhang Yimou"), trace(&[(BERLIN, "Hero"), ("Hero", "Zhang Yimou")]), musique()),
        ("hops right, answer lost", LostInMiddle, P::s1("Blind Shaft"), trace(&[(BERLIN, "Blind Shaft"), ("Blind Shaft", "Li Yang")]), musique()),
        ("hops right, wrong first paragraph", ErrorPropagation, P::s1("Blind Shaft"), trace(&[(FILLER, "Blind Shaft"), ("Blind Shaft", "Li Yang")]), musique()),
        ("near-miss hop", LostInMiddle, P::s1("Jia Zhangke"), trace(&[(BERLIN, "Blind Shaft film"), ("Blind Shaft", "Li Yang")]), musique()),
        ("facts on gold, answer wrong", LostInMiddle, P::s2("Mumbai", &[("Oberoi family", 0)]), None, hotpot()),
        ("facts start on distractor", ErrorPropagation, P::s2("Mumbai", &[("Hotpot distractor 1 3", 0), ("Oberoi family", 0)]), None, hotpot()),
        ("trace on gold, answer wrong", LostInMiddle, P::s1("Mumbai"), trace(&[("Oberoi family", "The Oberoi Group")]), hotpot()),
        (
            "comparison lost",
            LostInMiddle,
            P::s1("Blind Shaft"),
            trace(&[("The Mask of Fu Manchu", "1932"), ("Blind Shaft", "2003")]),
            twowiki(),
        ),
        ("comparison off-gold start", ErrorPropagation, P::s1("Blind Shaft"), trace(&[("Fu Manchu", "1929")]), twowiki()),
        ("closing pass only", Correct, P::s1("The Mask of Fu Manchu"), trace(&[]), twowiki()),
        ("nothing to check against", Other, P::s1("Mumbai"), trace(&[("Oberoi family", "x")]), bare(hotpot())),
        ("musique setting 2 without facts", HallucinationResponse, P::s2_no_facts("Li Yang"), None, musique()),
        ("musique setting 2 gold facts", Correct, P::s2("Li Yang", &[(BERLIN, 0), ("Blind Shaft", 1)]), None, musique()),
        ("tolerant-only output", Correct, P::s1("Delhi").lenient(), None, hotpot()),
    ]
}

