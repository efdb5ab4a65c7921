use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use amscheck_llm::*;

fn transcript(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/transcripts").join(name);
    fs::read_to_string(p).unwrap()
}

fn informative(s: &str) -> bool {
    s.chars().any(|c| c.is_alphanumeric())
}

/// Every line with content is a claim source, residue, or the clean verdict.
fn assert_accounted(text: &str, parsed: &ParsedBugs) {
    let mut pool: Vec<&str> = parsed.residue.iter().map(String::as_str).collect();
    pool.extend(parsed.claims.iter().map(|c| c.source.as_str()));
    let mut clean_lines = 0;
    for line in text.lines().filter(|l| informative(l) && !l.trim_start().starts_with("```")) {
        match pool.iter().position(|p| *p == line) {
            Some(i) => {
                pool.remove(i);
            }
            None => clean_lines += 1,
        }
    }
    assert!(pool.is_empty(), "unexpected entries {pool:?}");
    assert_eq!(clean_lines, usize::from(parsed.declared_clean), "silently dropped lines");
}

fn claims(p: &ParsedBugs) -> Vec<(usize, &str)> {
    p.claims.iter().map(|c| (c.line_no, c.rule_id.as_str())).collect()
}

#[test]
fn numbered_list() {
    let text = transcript("bug_01_numbered.txt");
    let p = parse_bug_response(&text);
    assert_eq!(
        claims(&p),
        vec![
            (4, "missing-transistor-node"),
            (9, "incorrect-resistor-value-format"),
            (12, "missing-end-statement")
        ]
    );
    assert_eq!(p.claims[1].suggestion.as_deref(), Some("R1 vdd out 10k"));
    assert_eq!(p.claims[1].description, "R1 uses the upper-case suffix 10K");
    assert_eq!(p.residue.len(), 1);
    assert_accounted(&text, &p);
}

#[test]
fn bulleted_markdown() {
    let text = transcript("bug_02_bullets.txt");
    let p = parse_bug_response(&text);
    assert_eq!(
        claims(&p),
        vec![(6, "floating-node"), (14, "incorrect-print-statement"), (17, "missing-capacitor-value")]
    );
    assert_eq!(p.claims[0].suggestion.as_deref(), Some("rename it to bias"));
    assert_eq!(p.claims[1].suggestion.as_deref(), Some(".PRINT DC V(out)"));
    assert_eq!(p.claims[2].suggestion.as_deref(), Some("C2 out 0 1p"));
    assert_eq!(p.residue.len(), 3);
    assert_accounted(&text, &p);
}

#[test]
fn prose_goes_to_residue() {
    let text = transcript("bug_03_prose_and_list.txt");
    let p = parse_bug_response(&text);
    assert_eq!(claims(&p), vec![(3, "missing-dc-increment"), (8, "incorrect-transistor-name")]);
    assert_eq!(p.claims[1].suggestion.as_deref(), Some("nch"));
    // Two lines of prose, the two headings, four echoed netlist lines, one closing line.
    assert_eq!(p.residue.len(), 9);
    assert!(p.residue.iter().any(|r| r == ".DC Vin 0 1.8 0.018"));
    assert_accounted(&text, &p);
}

#[test]
fn clean_declaration() {
    let text = transcript("bug_04_clean.txt");
    let p = parse_bug_response(&text);
    assert!(p.claims.is_empty());
    assert!(p.declared_clean);
    assert_eq!(p.residue.len(), 1);
    assert_accounted(&text, &p);
}

#[test]
fn unclassified_claims_kept() {
    let text = transcript("bug_05_unclassified.txt");
    let p = parse_bug_response(&text);
    assert_eq!(
        claims(&p),
        vec![(5, UNCLASSIFIED), (11, "special-characters-in-node-names"), (2, "incorrect-options-directive")]
    );
    assert_eq!(p.findings()[2].line_no, 2);
    assert_eq!(p.residue.len(), 2);
    assert_accounted(&text, &p);
}

fn known() -> (BTreeSet<String>, BTreeSet<String>) {
    let nodes = ["37", "12", "5", "0", "vdd", "out"].iter().map(|s| s.to_string()).collect();
    let comps = ["M9", "C3", "M1"].iter().map(|s| s.to_string()).collect();
    (nodes, comps)
}

fn set(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// Every segment with content either fed the verdict or a list, or is residue.
fn assert_segments_accounted(text: &str, p: &ParsedTrojan) {
    for seg in text.split(['\n', ';']).filter(|s| informative(s)) {
        let lower = seg.to_ascii_lowercase();
        let in_residue = p.residue.iter().any(|r| r == seg.trim() || r.ends_with(seg.trim()));
        let consumed = lower.contains("trojan") || lower.contains(':');
        assert!(in_residue || consumed, "dropped: {seg}");
    }
}

#[test]
fn verdict_and_lists() {
    let (n, c) = known();
    let text = transcript("trojan_01_verdict_nodes.txt");
    let p = parse_trojan_response(&text, &n, &c);
    assert_eq!(p.verdict, Some(true));
    assert_eq!(p.nodes, set(&["37", "12"]));
    assert_eq!(p.components, set(&["M9", "C3"]));
    assert_eq!(p.residue.len(), 3);
    assert_segments_accounted(&text, &p);
}

#[test]
fn semicolon_segments() {
    let (n, c) = known();
    let text = transcript("trojan_02_single_line.txt");
    let p = parse_trojan_response(&text, &n, &c);
    assert_eq!(p.verdict, Some(true));
    assert_eq!(p.nodes, set(&["37", "12"]));
    assert_eq!(p.components, set(&["M9"]));
    assert!(p.residue.is_empty());
}

#[test]
fn negative_verdict() {
    let (n, c) = known();
    let text = transcript("trojan_03_clean.txt");
    let p = parse_trojan_response(&text, &n, &c);
    assert_eq!(p.verdict, Some(false));
    assert!(p.nodes.is_empty() && p.components.is_empty());
    let r = p.to_report();
    assert!(!r.trojan_detected);
    assert_eq!(p.residue.len(), 1);
    assert_segments_accounted(&text, &p);
}

#[test]
fn hallucinated_names_are_residue() {
    let (n, c) = known();
    let text = transcript("trojan_04_hallucinated.txt");
    let p = parse_trojan_response(&text, &n, &c);
    assert_eq!(p.verdict, Some(true));
    assert_eq!(p.nodes, set(&["37", "12"]));
    assert_eq!(p.components, set(&["M9"]));
    assert!(p.residue.iter().any(|r| r.contains("`99`")));
    assert!(p.residue.iter().any(|r| r.contains("`M77`")));
    assert!(!p.nodes.contains("99"));
    assert_eq!(p.residue.len(), 3);
    assert_segments_accounted(&text, &p);
}

#[test]
fn verdict_inferred_from_lists() {
    let (n, c) = known();
    let text = transcript("trojan_05_no_verdict.txt");
    let p = parse_trojan_response(&text, &n, &c);
    assert_eq!(p.verdict, None);
    assert_eq!(p.nodes, set(&["5", "12"]));
    assert!(p.to_report().trojan_detected);
    assert_eq!(p.residue.len(), 4);
    assert_segments_accounted(&text, &p);
}

#[test]
fn empty_text() {
    let (n, c) = known();
    assert_eq!(parse_bug_response(""), ParsedBugs::default());
    assert_eq!(parse_trojan_response("", &n, &c), ParsedTrojan::default());
}

#[test]
fn summary_round_trip() {
    let (n, c) = known();
    let report = amscheck::detect::DetectionReport {
        trojan_detected: true,
        suspect_nodes: set(&["37", "12"]),
        suspect_components: set(&["M9"]),
        ..Default::default()
    };
    let p = parse_trojan_response(&render_report_summary(&report), &n, &c);
    assert_eq!(p.verdict, Some(true));
    assert_eq!(p.nodes, report.suspect_nodes);
    assert_eq!(p.components, report.suspect_components);
    assert!(p.residue.is_empty());

    let none = amscheck::detect::DetectionReport::default();
    let p = parse_trojan_response(&render_report_summary(&none), &n, &c);
    assert_eq!(p.verdict, Some(false));
    assert!(p.nodes.is_empty() && p.residue.is_empty());
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn parsers_are_total(text in "\\PC*") {
            let (n, c) = known();
            let b = parse_bug_response(&text);
            assert_accounted(&text, &b);
            let _ = parse_trojan_response(&text, &n, &c);
        }

        #[test]
        fn summary_recovers_sets(mask in 0u8..64) {
            let (n, c) = known();
            let nodes: Vec<&String> = n.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, x)| x).collect();
            let report = amscheck::detect::DetectionReport {
                trojan_detected: !nodes.is_empty(),
                suspect_nodes: nodes.into_iter().cloned().collect(),
                ..Default::default()
            };
            let p = parse_trojan_response(&render_report_summary(&report), &n, &c);
            prop_assert_eq!(p.verdict, Some(report.trojan_detected));
            prop_assert_eq!(p.nodes, report.suspect_nodes);
        }
    }
}
