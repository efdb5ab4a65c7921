//! Scoring of lint and detection runs against injection ground truth.
//!
//! Percentages are kept at full precision; `present_pct` does the rounding
//! for tables.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::detect::DetectionReport;
use crate::inject::{BugTruth, InjectionKind, InjectionRecord};
use crate::lint::{BugReport, LintFinding};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("expected a {expected:?} record, got {found:?}")]
    KindMismatch {
        expected: InjectionKind,
        found: InjectionKind,
    },
    #[error("nothing to aggregate")]
    EmptyInput,
}

/// One scored case. Metrics that do not apply, or whose denominator is
/// zero, are `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub bug_coverage_pct: Option<f64>,
    pub bug_resolved_pct: Option<f64>,
    pub fpr_pct: Option<f64>,
    /// Findings on the unmodified host; every one is a false positive.
    pub clean_findings: usize,
    pub trojan_identified: Option<bool>,
    pub trojan_coverage_pct: Option<f64>,
    pub precision_pct: Option<f64>,
    pub recall_pct: Option<f64>,
}

fn pct(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

pub fn precision(tp: usize, fp: usize) -> Option<f64> {
    pct(tp, tp + fp)
}

pub fn recall(tp: usize, fn_: usize) -> Option<f64> {
    pct(tp, tp + fn_)
}

fn expect_kind(rec: &InjectionRecord, want: InjectionKind) -> Result<(), MetricsError> {
    if rec.kind == want {
        Ok(())
    } else {
        Err(MetricsError::KindMismatch {
            expected: want,
            found: rec.kind,
        })
    }
}

/// A truth entry is matched by a finding with the same rule id on the same
/// line. `resolved` lists the truths whose fix removed the finding.
pub fn bug_metrics(
    truth: &InjectionRecord,
    report: &BugReport,
    resolved: &BTreeSet<BugTruth>,
    clean_findings: &[LintFinding],
) -> Result<MetricsSummary, MetricsError> {
    expect_kind(truth, InjectionKind::Bugs)?;
    let expected: BTreeSet<&BugTruth> = truth.bug_truth.iter().collect();
    let found: BTreeSet<BugTruth> = report
        .findings
        .iter()
        .map(|f| BugTruth {
            rule_id: f.rule_id.clone(),
            line_no: f.line_no,
        })
        .collect();
    let matched: BTreeSet<&BugTruth> = expected.iter().copied().filter(|t| found.contains(*t)).collect();
    let stray = report
        .findings
        .iter()
        .filter(|f| {
            !expected.iter().any(|t| t.rule_id == f.rule_id && t.line_no == f.line_no)
        })
        .count();
    let fixed = matched.iter().filter(|t| resolved.contains(**t)).count();
    // With nothing reported there is nothing to be wrong about.
    let fpr = if report.findings.is_empty() {
        Some(0.0)
    } else {
        pct(stray, report.findings.len())
    };
    Ok(MetricsSummary {
        tp: matched.len(),
        fp: stray,
        fn_: expected.len() - matched.len(),
        bug_coverage_pct: pct(matched.len(), expected.len()),
        bug_resolved_pct: pct(fixed, matched.len()),
        fpr_pct: fpr,
        clean_findings: clean_findings.len(),
        ..Default::default()
    })
}

pub fn trojan_metrics(truth: &InjectionRecord, report: &DetectionReport) -> Result<MetricsSummary, MetricsError> {
    expect_kind(truth, InjectionKind::Trojan)?;
    let hits = report
        .suspect_components
        .intersection(&truth.trojan_components)
        .count();
    let coverage = pct(hits, truth.trojan_components.len());
    let tp = report.suspect_nodes.intersection(&truth.impacted_nodes).count();
    let fp = report.suspect_nodes.len() - tp;
    let fn_ = truth.impacted_nodes.len() - tp;
    Ok(MetricsSummary {
        tp,
        fp,
        fn_,
        trojan_identified: Some(hits > 0),
        trojan_coverage_pct: coverage,
        precision_pct: precision(tp, fp),
        recall_pct: recall(tp, fn_),
        ..Default::default()
    })
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    (!defined.is_empty()).then(|| round2(defined.iter().sum::<f64>() / defined.len() as f64))
}

/// Average row: counts are summed, percentages averaged over the rows where
/// they are defined, identification holds only if it holds for every row.
pub fn aggregate(rows: &[MetricsSummary]) -> Result<MetricsSummary, MetricsError> {
    if rows.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let ids: Vec<bool> = rows.iter().filter_map(|r| r.trojan_identified).collect();
    Ok(MetricsSummary {
        tp: rows.iter().map(|r| r.tp).sum(),
        fp: rows.iter().map(|r| r.fp).sum(),
        fn_: rows.iter().map(|r| r.fn_).sum(),
        bug_coverage_pct: mean(rows.iter().map(|r| r.bug_coverage_pct)),
        bug_resolved_pct: mean(rows.iter().map(|r| r.bug_resolved_pct)),
        fpr_pct: mean(rows.iter().map(|r| r.fpr_pct)),
        clean_findings: rows.iter().map(|r| r.clean_findings).sum(),
        trojan_identified: (!ids.is_empty()).then(|| ids.iter().all(|b| *b)),
        trojan_coverage_pct: mean(rows.iter().map(|r| r.trojan_coverage_pct)),
        precision_pct: mean(rows.iter().map(|r| r.precision_pct)),
        recall_pct: mean(rows.iter().map(|r| r.recall_pct)),
    })
}

/// Truncate (not round) to `decimals` places: 91.666 → "91.6" at one place.
/// Undefined values print as `n/a`.
pub fn present_pct(v: Option<f64>, decimals: usize) -> String {
    match v {
        None => "n/a".into(),
        Some(x) => {
            let scale = 10f64.powi(decimals as i32);
            // Absorb representation error, e.g. 0.29 * 100 = 28.999999999999996.
            let t = (x * scale + 1e-9).trunc() / scale;
            format!("{t:.decimals$}")
        }
    }
}

/// Labelled rows plus their average, for CSV or JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub rows: Vec<(String, MetricsSummary)>,
    pub average: MetricsSummary,
}

const CSV_HEADER: &str = "case,tp,fp,fn,bug_coverage,bug_resolved,fpr,clean_findings,trojan_identified,trojan_coverage,precision,recall";

impl MetricsTable {
    pub fn new(rows: Vec<(String, MetricsSummary)>) -> Result<Self, MetricsError> {
        let summaries: Vec<MetricsSummary> = rows.iter().map(|(_, s)| s.clone()).collect();
        let average = aggregate(&summaries)?;
        Ok(MetricsTable { rows, average })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let avg = ("Average".to_string(), self.average.clone());
        for (label, s) in self.rows.iter().chain(std::iter::once(&avg)) {
            let ident = match s.trojan_identified {
                None => "n/a",
                Some(true) => "yes",
                Some(false) => "no",
            };
            let cells = [
                label.clone(),
                s.tp.to_string(),
                s.fp.to_string(),
                s.fn_.to_string(),
                present_pct(s.bug_coverage_pct, 2),
                present_pct(s.bug_resolved_pct, 2),
                present_pct(s.fpr_pct, 2),
                s.clean_findings.to_string(),
                ident.to_string(),
                present_pct(s.trojan_coverage_pct, 2),
                present_pct(s.precision_pct, 2),
                present_pct(s.recall_pct, 2),
            ];
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table always serializes")
    }
}

#[cfg(test)]
mod tests;
