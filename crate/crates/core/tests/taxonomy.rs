mod common;

use common::taxonomy_cases::cases;
use fsmqa_core::eval::{classify_error, score_sample, ErrorCategory, TaxonomyConfig};

use ErrorCategory::*;

#[test]
fn thirty_case_suite() {
    let config = TaxonomyConfig::default();
    let cases = cases();
    assert_eq!(cases.len(), 30);
    let mut failures = Vec::new();
    for (name, expected, pred, transcript, record) in &cases {
        let got = classify_error(&pred.0, transcript.as_ref(), record, &config);
        if got != *expected {
            failures.push(format!("{name}: expected {expected}, got {got}"));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
    for cat in ErrorCategory::ALL {
        assert!(cases.iter().any(|c| c.1 == cat), "no case for {cat}");
    }
}

#[test]
fn canonical_examples() {
    let config = TaxonomyConfig::default();
    let canonical = [
        ("unparseable output", FormatMismatch),
        ("correct from distractors", HallucinationResponse),
        ("first hop wrong", ErrorPropagation),
        ("hops right, answer lost", LostInMiddle),
    ];
    let cases = cases();
    for (name, expected) in canonical {
        let (_, _, pred, transcript, record) = cases.iter().find(|c| c.0 == name).unwrap();
        assert_eq!(classify_error(&pred.0, transcript.as_ref(), record, &config), expected, "{name}");
    }
}

#[test]
fn thresholds_are_configurable() {
    let strict = TaxonomyConfig {
        hallucination_threshold: 0.9,
        ..TaxonomyConfig::default()
    };
    let (_, _, pred, t, r) = cases().into_iter().find(|c| c.0 == "partial gold trace").unwrap();
    assert_eq!(classify_error(&pred.0, t.as_ref(), &r, &strict), HallucinationResponse);
    let loose = TaxonomyConfig {
        hop_match_threshold: 0.0,
        ..TaxonomyConfig::default()
    };
    let (_, _, pred, t, r) = cases().into_iter().find(|c| c.0 == "second hop wrong").unwrap();
    // Nothing scores below zero, so no hop can conflict.
    assert_eq!(classify_error(&pred.0, t.as_ref(), &r, &loose), LostInMiddle);
}

#[test]
fn score_sample_carries_category() {
    let (_, expected, pred, t, r) = cases().into_iter().find(|c| c.0 == "comparison lost").unwrap();
    let s = score_sample(&pred.0, &r, t.as_ref(), &TaxonomyConfig::default());
    assert_eq!(s.error_category, Some(expected));
    assert_eq!(s.ans_em, 0.0);
    assert_eq!(s.sup_f1, None);
}
