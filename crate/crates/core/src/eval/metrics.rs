use std::collections::{HashMap, HashSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::dataset::{SupportingFact, Triple};

static ARTICLES: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(a|an|the)\b").expect("static regex"));

/// `str.split()` whitespace: Unicode White_Space plus the ASCII separators
/// U+001C..U+001F.
fn is_py_space(c: char) -> bool {
    c.is_whitespace() || ('\u{1c}'..='\u{1f}').contains(&c)
}

fn py_split(s: &str) -> impl Iterator<Item = &str> {
    s.split(is_py_space).filter(|t| !t.is_empty())
}

/// Lowercase, strip ASCII punctuation, drop articles, collapse whitespace.
pub fn normalize_answer(s: &str) -> String {
    let lower = s.to_lowercase();
    let no_punc: String = lower.chars().filter(|c| !c.is_ascii_punctuation()).collect();
    let no_articles = ARTICLES.replace_all(&no_punc, " ");
    py_split(&no_articles).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnswerScore {
    pub em: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Token-level answer scores. yes/no/noanswer must match exactly to get any
/// credit. Two answers that both normalize to nothing score em=1, f1=1.
pub fn answer_scores(prediction: &str, gold: &str) -> AnswerScore {
    let pred = normalize_answer(prediction);
    let truth = normalize_answer(gold);
    let em = if pred == truth { 1.0 } else { 0.0 };
    if pred.is_empty() && truth.is_empty() {
        log::debug!("both answers normalize to empty; scoring as a match");
        return AnswerScore {
            em: 1.0,
            f1: 1.0,
            precision: 1.0,
            recall: 1.0,
        };
    }
    let zero = AnswerScore {
        em,
        f1: 0.0,
        precision: 0.0,
        recall: 0.0,
    };
    let special = ["yes", "no", "noanswer"];
    if (special.contains(&pred.as_str()) || special.contains(&truth.as_str())) && pred != truth {
        return zero;
    }
    let pred_tokens: Vec<&str> = pred.split(' ').filter(|t| !t.is_empty()).collect();
    let gold_tokens: Vec<&str> = truth.split(' ').filter(|t| !t.is_empty()).collect();
    let mut counts: HashMap<&str, i64> = HashMap::new();
    for t in &gold_tokens {
        *counts.entry(t).or_default() += 1;
    }
    let mut same = 0i64;
    for t in &pred_tokens {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                same += 1;
            }
        }
    }
    if same == 0 {
        return zero;
    }
    let precision = 1.0 * same as f64 / pred_tokens.len() as f64;
    let recall = 1.0 * same as f64 / gold_tokens.len() as f64;
    AnswerScore {
        em,
        f1: (2.0 * precision * recall) / (precision + recall),
        precision,
        recall,
    }
}

/// Set-overlap scores with counts kept for the classical joint product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetScore {
    pub em: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

pub fn set_scores<T: Eq + std::hash::Hash>(pred: &HashSet<T>, gold: &HashSet<T>) -> SetScore {
    let (mut tp, mut fp, mut fn_) = (0u32, 0u32, 0u32);
    for e in pred {
        if gold.contains(e) {
            tp += 1;
        } else {
            fp += 1;
        }
    }
    for e in gold {
        if !pred.contains(e) {
            fn_ += 1;
        }
    }
    let precision = if tp + fp > 0 { 1.0 * tp as f64 / (tp + fp) as f64 } else { 0.0 };
    let recall = if tp + fn_ > 0 { 1.0 * tp as f64 / (tp + fn_) as f64 } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    SetScore {
        em: if fp + fn_ == 0 { 1.0 } else { 0.0 },
        f1,
        precision,
        recall,
    }
}

pub fn sup_scores(pred: &[SupportingFact], gold: &[SupportingFact]) -> SetScore {
    let key = |f: &SupportingFact| (normalize_answer(&f.0), f.1);
    let p: HashSet<_> = pred.iter().map(key).collect();
    let g: HashSet<_> = gold.iter().map(key).collect();
    set_scores(&p, &g)
}

fn triple_key(t: &Triple) -> (String, String, String) {
    (normalize_answer(&t.0), normalize_answer(&t.1), normalize_answer(&t.2))
}

/// Triples match only when subject, relation and object all match.
pub fn joint_scores(pred: &[Triple], gold: &[Triple]) -> SetScore {
    let p: HashSet<_> = pred.iter().map(triple_key).collect();
    let g: HashSet<_> = gold.iter().map(triple_key).collect();
    set_scores(&p, &g)
}

/// Relation ignored: (subject, object) pairs only.
pub fn joint_scores_fuzzy(pred: &[Triple], gold: &[Triple]) -> SetScore {
    let key = |t: &Triple| {
        let (s, _, o) = triple_key(t);
        (s, o)
    };
    let p: HashSet<_> = pred.iter().map(key).collect();
    let g: HashSet<_> = gold.iter().map(key).collect();
    set_scores(&p, &g)
}

/// Classical joint: answer and supporting-fact precision/recall multiplied.
pub fn classical_joint(answer: &AnswerScore, sup: &SetScore) -> (f64, f64) {
    let p = answer.precision * sup.precision;
    let r = answer.recall * sup.recall;
    let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (answer.em * sup.em, f1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sf(t: &str, i: usize) -> SupportingFact {
        SupportingFact(t.into(), i)
    }

    fn tr(a: &str, b: &str, c: &str) -> Triple {
        Triple(a.into(), b.into(), c.into())
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_answer("The Mask of Fu Manchu"), "mask of fu manchu");
        assert_eq!(normalize_answer(""), "");
        assert_eq!(normalize_answer("1932."), "1932");
        assert_eq!(normalize_answer("  A  theater\tan the"), "theater");
    }

    #[test]
    fn answer_examples() {
        let s = answer_scores("The Mask of Fu Manchu", "Mask of Fu Manchu");
        assert_eq!((s.em, s.f1), (1.0, 1.0));
        let s = answer_scores("2003", "1932");
        assert_eq!((s.em, s.f1), (0.0, 0.0));
        let s = answer_scores("Blind Shaft 2003", "Blind Shaft");
        assert_eq!(s.em, 0.0);
        assert!((s.f1 - 0.8).abs() < 1e-12);
        assert!((s.precision - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.recall, 1.0);
        let s = answer_scores("yes it is", "yes");
        assert_eq!(s.f1, 0.0);
        let s = answer_scores("", "the");
        assert_eq!((s.em, s.f1), (1.0, 1.0));
    }

    #[test]
    fn sup_examples() {
        let s = sup_scores(&[sf("Blind Shaft", 0)], &[sf("Blind Shaft", 0)]);
        assert_eq!((s.em, s.f1), (1.0, 1.0));
        let s = sup_scores(&[sf("Blind Shaft", 0)], &[sf("Blind Shaft", 0), sf("Mask of Fu Manchu", 1)]);
        assert_eq!(s.em, 0.0);
        assert!((s.f1 - 2.0 / 3.0).abs() < 1e-12);
        let s = sup_scores(&[], &[sf("Blind Shaft", 0)]);
        assert_eq!((s.em, s.f1), (0.0, 0.0));
    }

    #[test]
    fn joint_examples() {
        let g = [tr("The Mask of Fu Manchu", "released in", "1932")];
        let s = joint_scores(&[tr("mask of fu manchu", "released in", "1932")], &g);
        assert_eq!((s.em, s.f1), (1.0, 1.0));
        let p = [tr("The Mask of Fu Manchu", "release year", "1932")];
        assert_eq!(joint_scores(&p, &g).f1, 0.0);
        assert_eq!(joint_scores_fuzzy(&p, &g).f1, 1.0);
        assert_eq!(joint_scores(&[], &g).f1, 0.0);
    }

    #[test]
    fn classical_product() {
        let a = answer_scores("Blind Shaft 2003", "Blind Shaft");
        let s = sup_scores(&[sf("x", 0)], &[sf("x", 0)]);
        let (em, f1) = classical_joint(&a, &s);
        assert_eq!(em, 0.0);
        assert!((f1 - 0.8).abs() < 1e-12);
    }
}
