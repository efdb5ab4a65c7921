use std::collections::BTreeSet;

use super::*;
use crate::lint::{lint_text, Ruleset};
use crate::netlist::{connectivity_graph, parse_netlist, Netlist};

const CS_AMP: &str = include_str!("../../../../fixtures/hosts/cs_amp.sp");

fn host() -> Netlist {
    parse_netlist(CS_AMP).0
}

fn plan(easy: usize, medium: usize, difficult: usize, seed: u64) -> BugPlan {
    BugPlan { easy, medium, difficult, seed }
}

#[test]
fn host_is_clean_and_fully_injectable() {
    assert!(lint_text(CS_AMP, &Ruleset::default()).unwrap().is_clean());
    assert_eq!(injectable_rules(&host()).len(), 18);
}

#[test]
fn plan_2_5_5_gives_12_truths() {
    let (text, rec) = inject_bugs(&host(), &plan(2, 5, 5, 7)).unwrap();
    assert_eq!(rec.bug_truth.len(), 12);
    let rules: BTreeSet<&str> = rec.bug_truth.iter().map(|t| t.rule_id.as_str()).collect();
    assert_eq!(rules.len(), 12);
    assert_eq!(text.lines().count(), CS_AMP.lines().count());
}

#[test]
fn empty_plan_is_identity() {
    let (text, rec) = inject_bugs(&host(), &plan(0, 0, 0, 3)).unwrap();
    assert_eq!(text, CS_AMP);
    assert!(rec.bug_truth.is_empty());
}

#[test]
fn seeds_change_sites_not_cardinality() {
    let (a, ra) = inject_bugs(&host(), &plan(2, 3, 3, 1)).unwrap();
    let (b, rb) = inject_bugs(&host(), &plan(2, 3, 3, 2)).unwrap();
    assert_eq!(ra.bug_truth.len(), rb.bug_truth.len());
    assert_ne!(a, b);
    assert_eq!(inject_bugs(&host(), &plan(2, 3, 3, 1)).unwrap().0, a);
}

#[test]
fn too_many_bugs_is_insufficient_sites() {
    let err = inject_bugs(&host(), &plan(5, 0, 0, 1)).unwrap_err();
    assert!(matches!(err, InjectError::InsufficientSites { requested: 5, .. }), "{err:?}");
    let tiny = parse_netlist("* r\nV1 a 0 DC 1\nR1 a 0 1k\n.END\n").0;
    let err = inject_rule(&tiny, "missing-ends", 0).unwrap_err();
    assert_eq!(err, InjectError::NoSite("missing-ends".into()));
}

#[test]
fn dirty_host_rejected() {
    let dirty = parse_netlist(&CS_AMP.replace("10k", "10K")).0;
    assert!(matches!(inject_bugs(&dirty, &plan(1, 0, 0, 0)), Err(InjectError::HostNotClean(_))));
}

#[test]
fn every_single_rule_is_detected_where_recorded() {
    for rule in crate::lint::RuleId::ALL {
        for seed in 0..4 {
            let (text, truth) = inject_rule(&host(), rule.id(), seed).unwrap();
            let r = lint_text(&text, &Ruleset::default()).unwrap();
            assert!(
                r.findings.iter().any(|f| f.rule_id == truth.rule_id && f.line_no == truth.line_no),
                "{} seed {seed}:\n{text}\n{:#?}",
                rule.id(),
                r.findings
            );
        }
    }
}

#[test]
fn trojan_adds_seven_and_labels() {
    let n = host();
    let (text, rec) = inject_trojan(&n, "642", "outb", "nb", 1).unwrap();
    let after = parse_netlist(&text).0;
    assert_eq!(after.elements.len(), n.elements.len() + TEMPLATE_SIZE);
    assert_eq!(rec.label, "642_troj_outb");
    assert_eq!(rec.trojan_components.len(), 7);
    assert_eq!(rec.impacted_nodes.len(), 3);
    assert!(rec.impacted_nodes.is_subset(&after.nodes()));
    assert!(rec.impacted_nodes.contains("outb") && rec.impacted_nodes.contains("nb"));
    assert_eq!(parse_label(&rec.label), Some(("642", "outb")));
    assert!(text.trim_end().ends_with(".END"));
    assert!(lint_text(&text, &Ruleset::default()).unwrap().is_clean());
}

#[test]
fn trojan_errors() {
    let n = host();
    let empty = parse_netlist("").0;
    assert_eq!(
        inject_trojan(&empty, "x", "1", "2", 0).unwrap_err(),
        InjectError::NodeNotFound("1".into())
    );
    assert_eq!(inject_trojan(&n, "x", "nope", "nb", 0).unwrap_err(), InjectError::NodeNotFound("nope".into()));
    assert_eq!(inject_trojan(&n, "x", "0", "nb", 0).unwrap_err(), InjectError::GroundTarget("0".into()));
    assert_eq!(inject_trojan(&n, "x", "vdd", "nb", 0).unwrap_err(), InjectError::GroundTarget("vdd".into()));
    assert_eq!(inject_trojan(&n, "x", "nb", "nb", 0).unwrap_err(), InjectError::CoincidentTargets("nb".into()));
}

#[test]
fn labels_round_trip() {
    assert_eq!(parse_label("642_troj_37"), Some(("642", "37")));
    assert_eq!(parse_label("my_amp_troj_1"), Some(("my_amp", "1")));
    assert_eq!(parse_label("642"), None);
}

fn mapped_edges(n: &Netlist, nodes: &std::collections::BTreeMap<String, String>) -> BTreeSet<(String, String)> {
    let g = connectivity_graph(n);
    let m = |x: &String| nodes.get(x).cloned().unwrap_or_else(|| x.clone());
    g.adjacency
        .iter()
        .flat_map(|(a, ns)| ns.iter().map(move |(b, _)| (a.clone(), b.clone())))
        .map(|(a, b)| (m(&a), m(&b)))
        .collect()
}

#[test]
fn scramble_preserves_connectivity() {
    let (text, rec) = inject_trojan(&host(), "cs", "outb", "nb", 1).unwrap();
    let (scrambled, rec2, maps) = scramble(&text, &rec, 9).unwrap();
    let before = parse_netlist(&text).0;
    let after = parse_netlist(&scrambled).0;
    assert_eq!(mapped_edges(&before, &maps.nodes), mapped_edges(&after, &Default::default()));
    let degrees = |n: &Netlist| {
        let g = connectivity_graph(n);
        let mut d: Vec<usize> = g.degree.values().copied().collect();
        d.sort();
        d
    };
    assert_eq!(degrees(&before), degrees(&after));
    assert_eq!(rec2.trojan_components.len(), 7);
    for c in &rec2.trojan_components {
        assert!(after.element(c).is_some(), "{c}");
        assert!(!c.contains("tj"), "{c}");
    }
    assert_eq!(rec2.impacted_nodes.len(), 3);
    assert!(rec2.impacted_nodes.is_subset(&after.nodes()));
    assert_eq!(scramble(&text, &rec, 9).unwrap().0, scrambled);
    assert_ne!(scramble(&text, &rec, 10).unwrap().0, scrambled);
}

#[test]
fn scramble_bounds_parameters() {
    let (text, rec) = inject_trojan(&host(), "cs", "outb", "nb", 1).unwrap();
    let before = parse_netlist(&text).0;
    for seed in 0..20 {
        let (s, _, maps) = scramble(&text, &rec, seed).unwrap();
        let after = parse_netlist(&s).0;
        for (old, new) in &maps.elements {
            let a = before.element(old).unwrap();
            let b = after.element(new).unwrap();
            for (k, v) in &a.params {
                let ratio = b.params[k].si() / v.si();
                assert!((0.5 - 1e-9..=1.5 + 1e-9).contains(&ratio), "{old}.{k} {ratio}");
            }
            if let (Some(x), Some(y)) = (&a.value, &b.value) {
                let ratio = y.si() / x.si();
                assert!((0.5 - 1e-9..=1.5 + 1e-9).contains(&ratio));
            }
        }
    }
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn truth_lines_are_found(e in 0usize..=3, m in 0usize..=5, d in 0usize..=6, seed in any::<u64>()) {
            match inject_bugs(&host(), &plan(e, m, d, seed)) {
                Ok((text, rec)) => {
                    prop_assert_eq!(rec.bug_truth.len(), e + m + d);
                    let r = lint_text(&text, &Ruleset::default()).unwrap();
                    for t in &rec.bug_truth {
                        prop_assert!(
                            r.findings.iter().any(|f| f.rule_id == t.rule_id && f.line_no == t.line_no),
                            "missing {:?}\n{}\n{:#?}", t, text, r.findings
                        );
                    }
                }
                Err(InjectError::InsufficientSites { .. }) => {}
                Err(other) => prop_assert!(false, "{other:?}"),
            }
        }
    }
}
