use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{ErrorCategory, Prediction, SampleScore};
use crate::dataset::DatasetKind;
use crate::prompt::Setting;

/// Arithmetic mean over the samples where the value is present.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mean {
    pub value: Option<f64>,
    pub count: usize,
}

impl Mean {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let (sum, count) = values
            .into_iter()
            .flatten()
            .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
        Self {
            value: (count > 0).then(|| sum / count as f64),
            count,
        }
    }

    /// No sample carried the value.
    pub fn is_absent(&self) -> bool {
        self.count == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub strategy: String,
    pub dataset: DatasetKind,
    pub setting: Setting,
    pub n: usize,
    pub ans_em: Mean,
    pub ans_f1: Mean,
    pub ans_precision: Mean,
    pub ans_recall: Mean,
    #[serde(default, skip_serializing_if = "Mean::is_absent")]
    pub sup_em: Mean,
    #[serde(default, skip_serializing_if = "Mean::is_absent")]
    pub sup_f1: Mean,
    #[serde(default, skip_serializing_if = "Mean::is_absent")]
    pub joint_em: Mean,
    #[serde(default, skip_serializing_if = "Mean::is_absent")]
    pub joint_f1: Mean,
    #[serde(default, skip_serializing_if = "Mean::is_absent")]
    pub joint_fuzzy_f1: Mean,
    #[serde(default, skip_serializing_if = "Mean::is_absent")]
    pub classic_joint_em: Mean,
    #[serde(default, skip_serializing_if = "Mean::is_absent")]
    pub classic_joint_f1: Mean,
    pub format_rate_strict: Option<f64>,
    pub format_rate_tolerant: Option<f64>,
    pub error_histogram: BTreeMap<ErrorCategory, usize>,
    pub notes: Vec<String>,
}

/// (strict, tolerant) share of parseable final outputs; `None` when empty.
pub fn format_rate(predictions: &[Prediction]) -> Option<(f64, f64)> {
    rate(predictions.iter().map(|p| (p.format_ok_strict, p.format_ok_tolerant)))
}

fn rate(flags: impl Iterator<Item = (bool, bool)>) -> Option<(f64, f64)> {
    let (mut n, mut strict, mut tolerant) = (0usize, 0usize, 0usize);
    for (s, t) in flags {
        n += 1;
        strict += s as usize;
        tolerant += (s || t) as usize;
    }
    (n > 0).then(|| (strict as f64 / n as f64, tolerant as f64 / n as f64))
}

pub fn aggregate(strategy: &str, dataset: DatasetKind, setting: Setting, scores: &[SampleScore]) -> MetricsReport {
    let m = |f: fn(&SampleScore) -> Option<f64>| Mean::of(scores.iter().map(f));
    let mut histogram = BTreeMap::new();
    for s in scores {
        if let Some(c) = s.error_category {
            *histogram.entry(c).or_insert(0) += 1;
        }
    }
    let format = rate(scores.iter().map(|s| (s.format_ok_strict, s.format_ok_tolerant)));
    let mut notes = vec![
        "error categories are heuristic; rules apply in order format, hallucination, propagation, lost-in-middle".to_string(),
        "joint_* compares evidence triples; classic_joint_* is the answer x supporting-fact product".to_string(),
    ];
    if setting == Setting::S2 && !dataset.has_sentence_level_gold() {
        notes.push(format!("{dataset} has no sentence-level gold; supporting-fact and joint columns are absent"));
    }
    MetricsReport {
        strategy: strategy.to_string(),
        dataset,
        setting,
        n: scores.len(),
        ans_em: m(|s| Some(s.ans_em)),
        ans_f1: m(|s| Some(s.ans_f1)),
        ans_precision: m(|s| Some(s.ans_precision)),
        ans_recall: m(|s| Some(s.ans_recall)),
        sup_em: m(|s| s.sup_em),
        sup_f1: m(|s| s.sup_f1),
        joint_em: m(|s| s.joint_em),
        joint_f1: m(|s| s.joint_f1),
        joint_fuzzy_f1: m(|s| s.joint_fuzzy_f1),
        classic_joint_em: m(|s| s.classic_joint_em),
        classic_joint_f1: m(|s| s.classic_joint_f1),
        format_rate_strict: format.map(|f| f.0),
        format_rate_tolerant: format.map(|f| f.1),
        error_histogram: histogram,
        notes,
    }
}

fn pct(v: Option<f64>) -> String {
    v.map(|v| format!("{:.1}", v * 100.0)).unwrap_or_else(|| "-".into())
}

/// Aligned plain-text table, one row per report, values in percent.
pub fn render_table(reports: &[MetricsReport]) -> String {
    // Supporting-fact and joint columns appear only when some row can fill them.
    let sup = reports
        .iter()
        .any(|r| r.setting == Setting::S2 && r.dataset.has_sentence_level_gold());
    let joint = reports.iter().any(|r| !r.joint_f1.is_absent());
    let mut header = vec!["Strategy", "Dataset", "Setting", "N", "EM", "F1", "Format", "Format(tol)"];
    if sup {
        header.extend(["Sup EM", "Sup F1"]);
    }
    if joint {
        header.extend(["Joint EM", "Joint F1"]);
    }
    let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for r in reports {
        let mut row = vec![
            r.strategy.clone(),
            r.dataset.to_string(),
            r.setting.to_string(),
            r.n.to_string(),
            pct(r.ans_em.value),
            pct(r.ans_f1.value),
            pct(r.format_rate_strict),
            pct(r.format_rate_tolerant),
        ];
        if sup {
            row.extend([pct(r.sup_em.value), pct(r.sup_f1.value)]);
        }
        if joint {
            row.extend([pct(r.joint_em.value), pct(r.joint_f1.value)]);
        }
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                if c < 3 {
                    format!("{cell:<w$}", w = widths[c])
                } else {
                    format!("{cell:>w$}", w = widths[c])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
        if i == 0 {
            let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            let _ = writeln!(out, "{}", "-".repeat(total));
        }
    }
    out
}
