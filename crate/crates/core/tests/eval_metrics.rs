mod common;

use std::collections::HashSet;

use common::data;
use fsmqa_core::dataset::{DatasetKind, SupportingFact, Triple};
use fsmqa_core::eval::{
    aggregate, answer_scores, classical_joint, format_rate, joint_scores, joint_scores_fuzzy, normalize_answer,
    render_table, set_scores, sup_scores, ErrorCategory, Mean, Prediction, SampleScore,
};
use fsmqa_core::prompt::Setting;
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct Vector {
    prediction: String,
    gold: String,
    em: f64,
    f1: f64,
    precision: f64,
    recall: f64,
}

#[test]
fn answer_scores_match_reference_vectors() {
    let vectors: Vec<Vector> =
        serde_json::from_str(&std::fs::read_to_string(data("answer_vectors.json")).unwrap()).unwrap();
    assert_eq!(vectors.len(), 200);
    for v in &vectors {
        let s = answer_scores(&v.prediction, &v.gold);
        let ctx = format!("{:?} vs {:?}", v.prediction, v.gold);
        assert_eq!(s.em, v.em, "em {ctx}");
        assert_eq!(s.f1.to_bits(), v.f1.to_bits(), "f1 {ctx}: {} != {}", s.f1, v.f1);
        assert_eq!(s.precision.to_bits(), v.precision.to_bits(), "precision {ctx}");
        assert_eq!(s.recall.to_bits(), v.recall.to_bits(), "recall {ctx}");
    }
}

#[test]
fn normalization_examples() {
    assert_eq!(normalize_answer("The Mask Of Fu Manchu"), "mask of fu manchu");
    assert_eq!(normalize_answer("  An  apple, the pie! "), "apple pie");
    assert_eq!(normalize_answer("Li\u{1c}Yang"), "li yang");
    assert_eq!(normalize_answer("Zürich"), "zürich");
}

#[test]
fn empty_pair_scores_as_match() {
    let s = answer_scores("", "the");
    assert_eq!((s.em, s.f1), (1.0, 1.0));
    let blank = answer_scores("", "Paris");
    assert_eq!((blank.em, blank.f1), (0.0, 0.0));
}

fn sf(t: &str, i: usize) -> SupportingFact {
    SupportingFact(t.into(), i)
}

fn tr(s: &str, r: &str, o: &str) -> Triple {
    Triple(s.into(), r.into(), o.into())
}

#[test]
fn supporting_fact_scores() {
    let gold = [sf("Blind Shaft", 0), sf("The Mask of Fu Manchu", 0)];
    let exact = sup_scores(&gold, &gold);
    assert_eq!((exact.em, exact.f1), (1.0, 1.0));
    let half = sup_scores(&[sf("blind shaft", 0), sf("Blind Shaft", 1)], &gold);
    assert_eq!((half.em, half.precision, half.recall, half.f1), (0.0, 0.5, 0.5, 0.5));
    let none = sup_scores(&[], &gold);
    assert_eq!((none.em, none.f1, none.precision), (0.0, 0.0, 0.0));
    let both_empty = sup_scores(&[], &[]);
    assert_eq!((both_empty.em, both_empty.f1), (1.0, 0.0));
}

#[test]
fn evidence_joint_scores() {
    let gold = [tr("Blind Shaft", "publication date", "2003"), tr("The Mask of Fu Manchu", "publication date", "1932")];
    let pred = [tr("Blind Shaft", "released in", "2003"), tr("The Mask of Fu Manchu", "publication date", "1932")];
    let strict = joint_scores(&pred, &gold);
    assert_eq!((strict.em, strict.f1), (0.0, 0.5));
    let fuzzy = joint_scores_fuzzy(&pred, &gold);
    assert_eq!((fuzzy.em, fuzzy.f1), (1.0, 1.0));
}

#[test]
fn classical_joint_product() {
    let ans = answer_scores("Paris France", "Paris");
    let sup = sup_scores(&[sf("a", 0)], &[sf("a", 0), sf("b", 1)]);
    let (em, f1) = classical_joint(&ans, &sup);
    assert_eq!(em, 0.0);
    let p = 0.5 * 1.0;
    let r = 1.0 * 0.5;
    assert_eq!(f1, 2.0 * p * r / (p + r));
}

#[test]
fn set_scores_counts() {
    let p: HashSet<u8> = [1, 2, 3].into();
    let g: HashSet<u8> = [2, 3, 4, 5].into();
    let s = set_scores(&p, &g);
    assert_eq!(s.precision, 2.0 / 3.0);
    assert_eq!(s.recall, 0.5);
}

fn score(em: f64, f1: f64, sup: Option<f64>, strict: bool, tolerant: bool, cat: ErrorCategory) -> SampleScore {
    SampleScore {
        record_id: "r".into(),
        ans_em: em,
        ans_f1: f1,
        ans_precision: f1,
        ans_recall: f1,
        sup_em: sup,
        sup_f1: sup,
        joint_em: None,
        joint_f1: None,
        joint_fuzzy_f1: None,
        classic_joint_em: None,
        classic_joint_f1: None,
        format_ok_strict: strict,
        format_ok_tolerant: tolerant,
        error_category: Some(cat),
    }
}

fn arb_score() -> impl Strategy<Value = SampleScore> {
    (0u32..=1, 0u32..=8, prop::option::of(0u32..=4), any::<bool>(), any::<bool>()).prop_map(|(em, f1, sup, s, t)| {
        score(
            em as f64,
            f1 as f64 / 8.0,
            sup.map(|v| v as f64 / 4.0),
            s,
            s || t,
            if em == 1 {
                ErrorCategory::Correct
            } else {
                ErrorCategory::Other
            },
        )
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, failure_persistence: None, ..ProptestConfig::default() })]

    /// The mean over a union is the count-weighted mean of the parts.
    #[test]
    fn aggregation_is_linear(a in prop::collection::vec(arb_score(), 1..40), b in prop::collection::vec(arb_score(), 1..40)) {
        let ra = aggregate("s", DatasetKind::HotpotQA, Setting::S2, &a);
        let rb = aggregate("s", DatasetKind::HotpotQA, Setting::S2, &b);
        let all: Vec<SampleScore> = a.iter().chain(&b).cloned().collect();
        let r = aggregate("s", DatasetKind::HotpotQA, Setting::S2, &all);
        let weighted = |x: Mean, y: Mean| -> Option<f64> {
            match (x.value, y.value) {
                (None, None) => None,
                (Some(v), None) => Some(v),
                (None, Some(w)) => Some(w),
                (Some(v), Some(w)) => Some((v * x.count as f64 + w * y.count as f64) / (x.count + y.count) as f64),
            }
        };
        prop_assert_eq!(r.n, a.len() + b.len());
        prop_assert!(close(r.ans_em.value.unwrap(), weighted(ra.ans_em, rb.ans_em).unwrap()));
        prop_assert!(close(r.ans_f1.value.unwrap(), weighted(ra.ans_f1, rb.ans_f1).unwrap()));
        match (r.sup_f1.value, weighted(ra.sup_f1, rb.sup_f1)) {
            (Some(x), Some(y)) => prop_assert!(close(x, y)),
            (x, y) => prop_assert_eq!(x, y),
        }
        prop_assert_eq!(r.sup_f1.count, ra.sup_f1.count + rb.sup_f1.count);
        let fa = ra.format_rate_strict.unwrap() * a.len() as f64;
        let fb = rb.format_rate_strict.unwrap() * b.len() as f64;
        prop_assert!(close(r.format_rate_strict.unwrap(), (fa + fb) / all.len() as f64));
        for cat in ErrorCategory::ALL {
            let n = |h: &std::collections::BTreeMap<ErrorCategory, usize>| h.get(&cat).copied().unwrap_or(0);
            prop_assert_eq!(n(&r.error_histogram), n(&ra.error_histogram) + n(&rb.error_histogram));
        }
    }
}

#[test]
fn empty_aggregate_has_no_values() {
    let r = aggregate("s", DatasetKind::Musique, Setting::S2, &[]);
    assert_eq!(r.n, 0);
    assert_eq!(r.ans_em.value, None);
    assert_eq!(r.format_rate_strict, None);
    assert!(r.notes.iter().any(|n| n.contains("no sentence-level gold")));
}

#[test]
fn table_marks_absent_columns() {
    let hp = aggregate("sg-fsm1", DatasetKind::HotpotQA, Setting::S2, &[score(1.0, 1.0, Some(0.5), true, true, ErrorCategory::Correct)]);
    let mu = aggregate("sg-fsm1", DatasetKind::Musique, Setting::S2, &[score(0.0, 0.5, None, false, true, ErrorCategory::Other)]);
    let table = render_table(&[hp, mu]);
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].contains("Sup F1"), "{table}");
    assert!(lines.iter().any(|l| l.contains("musique") && l.contains(" - ")), "{table}");
    assert!(lines.iter().any(|l| l.contains("hotpotqa") && l.contains("100.0")), "{table}");
}

fn pred(strict: bool, tolerant: bool) -> Prediction {
    Prediction {
        record_id: "r".into(),
        strategy: "s".into(),
        setting: Setting::S1,
        answer: "x".into(),
        supporting_facts: None,
        evidences: None,
        format_ok_strict: strict,
        format_ok_tolerant: tolerant,
        terminal_state: None,
    }
}

#[test]
fn format_rate_counts() {
    assert_eq!(format_rate(&[]), None);
    let preds = [pred(true, true), pred(false, true), pred(false, false), pred(true, true)];
    assert_eq!(format_rate(&preds), Some((0.5, 0.75)));
}
