use super::*;
use crate::lint::Summary;

fn truth(n: usize) -> InjectionRecord {
    InjectionRecord {
        kind: InjectionKind::Bugs,
        label: "t".into(),
        bug_truth: (0..n)
            .map(|i| BugTruth { rule_id: format!("r{i}"), line_no: i + 2 })
            .collect(),
        trojan_components: BTreeSet::new(),
        impacted_nodes: BTreeSet::new(),
        wiring: None,
    }
}

fn finding(rule: &str, line: usize) -> LintFinding {
    LintFinding {
        rule_id: rule.into(),
        line_no: line,
        element_or_card: String::new(),
        snippet: String::new(),
        message: String::new(),
        suggestion: None,
    }
}

fn report(fs: Vec<LintFinding>) -> BugReport {
    BugReport { findings: fs, summary: Summary::default(), corrected_text: None }
}

/// Find all but `missed` of the truths, plus `extra` stray findings.
fn scored(total: usize, missed: usize, extra: usize) -> MetricsSummary {
    let t = truth(total);
    let mut fs: Vec<LintFinding> = t.bug_truth[missed..]
        .iter()
        .map(|b| finding(&b.rule_id, b.line_no))
        .collect();
    fs.extend((0..extra).map(|i| finding("stray", 100 + i)));
    let resolved: BTreeSet<BugTruth> = t.bug_truth.iter().cloned().collect();
    bug_metrics(&t, &report(fs), &resolved, &[]).unwrap()
}

#[test]
fn eleven_of_twelve() {
    let m = scored(12, 1, 0);
    assert!((m.bug_coverage_pct.unwrap() - 100.0 * 11.0 / 12.0).abs() < 1e-12);
    assert_eq!(present_pct(m.bug_coverage_pct, 1), "91.6");
    assert_eq!((m.tp, m.fp, m.fn_), (11, 0, 1));
    assert_eq!(m.bug_resolved_pct, Some(100.0));
    assert_eq!(m.fpr_pct, Some(0.0));
}

#[test]
fn fourteen_of_fifteen() {
    let m = scored(15, 1, 0);
    assert_eq!(present_pct(m.bug_coverage_pct, 1), "93.3");
}

#[test]
fn stray_findings_raise_fpr() {
    let m = scored(4, 0, 1);
    assert_eq!(m.fpr_pct, Some(20.0));
    assert_eq!(m.fp, 1);
}

#[test]
fn no_findings_means_zero_fpr() {
    let t = truth(0);
    let m = bug_metrics(&t, &report(vec![]), &BTreeSet::new(), &[]).unwrap();
    assert_eq!(m.fpr_pct, Some(0.0));
    assert_eq!(m.bug_coverage_pct, None);
    assert_eq!(m.bug_resolved_pct, None);
}

#[test]
fn unresolved_fix_counts() {
    let t = truth(4);
    let fs = t.bug_truth.iter().map(|b| finding(&b.rule_id, b.line_no)).collect();
    let resolved: BTreeSet<BugTruth> = t.bug_truth[..3].iter().cloned().collect();
    let m = bug_metrics(&t, &report(fs), &resolved, &[finding("x", 1)]).unwrap();
    assert_eq!(m.bug_resolved_pct, Some(75.0));
    assert_eq!(m.clean_findings, 1);
}

#[test]
fn wrong_line_does_not_match() {
    let t = truth(1);
    let f = finding(&t.bug_truth[0].rule_id, t.bug_truth[0].line_no + 1);
    let m = bug_metrics(&t, &report(vec![f]), &BTreeSet::new(), &[]).unwrap();
    assert_eq!(m.bug_coverage_pct, Some(0.0));
    assert_eq!(m.fpr_pct, Some(100.0));
}

fn troj(components: &[&str], nodes: &[&str]) -> InjectionRecord {
    InjectionRecord {
        kind: InjectionKind::Trojan,
        label: "c_troj_a".into(),
        bug_truth: vec![],
        trojan_components: components.iter().map(|s| s.to_string()).collect(),
        impacted_nodes: nodes.iter().map(|s| s.to_string()).collect(),
        wiring: None,
    }
}

fn detection(components: &[&str], nodes: &[&str]) -> DetectionReport {
    DetectionReport {
        trojan_detected: !(components.is_empty() && nodes.is_empty()),
        suspect_components: components.iter().map(|s| s.to_string()).collect(),
        suspect_nodes: nodes.iter().map(|s| s.to_string()).collect(),
        ..Default::default()
    }
}

const SEVEN: [&str; 7] = ["M1", "M2", "M3", "M4", "M5", "C1", "M6"];

#[test]
fn one_of_seven_components() {
    let m = trojan_metrics(&troj(&SEVEN, &["a", "b", "c"]), &detection(&["M1", "R9"], &[])).unwrap();
    assert_eq!(present_pct(m.trojan_coverage_pct, 2), "14.28");
    assert_eq!(m.trojan_identified, Some(true));
    assert_eq!(m.precision_pct, None);
    assert_eq!(m.recall_pct, Some(0.0));
}

#[test]
fn perfect_and_partial_node_sets() {
    let t = troj(&SEVEN, &["a", "b", "c"]);
    let m = trojan_metrics(&t, &detection(&[], &["a", "b", "c"])).unwrap();
    assert_eq!((m.precision_pct, m.recall_pct), (Some(100.0), Some(100.0)));
    assert_eq!(m.trojan_identified, Some(false));

    let t = troj(&SEVEN, &["a", "b", "d"]);
    let m = trojan_metrics(&t, &detection(&[], &["a", "b", "c"])).unwrap();
    assert_eq!((m.tp, m.fp, m.fn_), (2, 1, 1));
    assert_eq!(present_pct(m.precision_pct, 1), "66.6");
    assert!((m.precision_pct.unwrap() - 200.0 / 3.0).abs() < 1e-12);
    assert_eq!(m.precision_pct, m.recall_pct);
}

#[test]
fn kind_checked() {
    assert!(matches!(
        trojan_metrics(&truth(1), &DetectionReport::default()),
        Err(MetricsError::KindMismatch { .. })
    ));
    assert!(matches!(
        bug_metrics(&troj(&[], &[]), &report(vec![]), &BTreeSet::new(), &[]),
        Err(MetricsError::KindMismatch { .. })
    ));
}

#[test]
fn averages() {
    let row = |c: f64| MetricsSummary { trojan_coverage_pct: Some(c), ..Default::default() };
    let avg = aggregate(&[row(100.0), row(85.7)]).unwrap();
    assert_eq!(avg.trojan_coverage_pct, Some(92.85));
    assert_eq!(aggregate(&[row(42.0)]).unwrap(), row(42.0));
    assert_eq!(aggregate(&[]).unwrap_err(), MetricsError::EmptyInput);

    let undefined = MetricsSummary::default();
    let avg = aggregate(&[row(50.0), undefined]).unwrap();
    assert_eq!(avg.trojan_coverage_pct, Some(50.0));
    assert_eq!(avg.precision_pct, None);

    let perfect = MetricsSummary {
        trojan_identified: Some(true),
        trojan_coverage_pct: Some(100.0),
        precision_pct: Some(100.0),
        recall_pct: Some(100.0),
        ..Default::default()
    };
    let avg = aggregate(&vec![perfect.clone(); 30]).unwrap();
    assert_eq!(avg, perfect);
}

#[test]
fn presentation() {
    assert_eq!(present_pct(None, 2), "n/a");
    assert_eq!(present_pct(Some(100.0), 1), "100.0");
    assert_eq!(present_pct(Some(300.0 / 7.0), 1), "42.8");
    assert_eq!(present_pct(Some(29.0), 2), "29.00");
}

#[test]
fn csv_has_average_row() {
    let a = trojan_metrics(&troj(&SEVEN, &["a"]), &detection(&["M1"], &["a"])).unwrap();
    let b = trojan_metrics(&troj(&SEVEN, &["a"]), &detection(&[], &[])).unwrap();
    let t = MetricsTable::new(vec![("c1".into(), a), ("c2".into(), b)]).unwrap();
    let csv = t.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("case,tp,fp,fn"));
    assert!(lines[3].starts_with("Average,1,0,1,"));
    assert!(lines[2].contains(",no,0.00,n/a,0.00"));
    let v: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn swap_fp_fn_swaps_precision_recall(tp in 0usize..50, fp in 0usize..50, fn_ in 0usize..50) {
            prop_assert_eq!(precision(tp, fp), recall(tp, fp));
            prop_assert_eq!(precision(tp, fn_), recall(tp, fn_));
            if let (Some(p), Some(r)) = (precision(tp, fp), recall(tp, fn_)) {
                prop_assert!((0.0..=100.0).contains(&p) && (0.0..=100.0).contains(&r));
            }
        }

        #[test]
        fn coverage_is_sevenths(mask in 0u8..128, extra in 0usize..3) {
            let mut found: Vec<&str> = SEVEN.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, c)| *c).collect();
            let strays = ["R1", "R2", "R3"];
            found.extend(&strays[..extra]);
            let m = trojan_metrics(&troj(&SEVEN, &["a", "b", "c"]), &detection(&found, &[])).unwrap();
            let k = mask.count_ones() as f64;
            prop_assert_eq!(m.trojan_coverage_pct, Some(100.0 * k / 7.0));
        }

        #[test]
        fn recall_is_thirds(mask in 0u8..8, extra in 0usize..3) {
            let imp = ["a", "b", "c"];
            let mut sus: Vec<&str> = imp.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, c)| *c).collect();
            let strays = ["x", "y", "z"];
            sus.extend(&strays[..extra]);
            let m = trojan_metrics(&troj(&SEVEN, &imp), &detection(&[], &sus)).unwrap();
            prop_assert_eq!(m.recall_pct, Some(100.0 * mask.count_ones() as f64 / 3.0));
        }
    }
}
