//! Seeded injection of single syntax bugs, one rule per slot.
//!
//! Every mutation edits one physical line in place (a deleted card becomes a
//! blank line), so line numbers recorded as ground truth stay valid while
//! later bugs are injected.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BugPlan, BugTruth, InjectError, InjectionKind, InjectionRecord};
use crate::lint::{lint, Complexity, RuleId, Ruleset};
use crate::netlist::lexer::{fold, LineKind, LogicalLine, Token};
use crate::netlist::parse::looks_like_model;
use crate::netlist::{
    is_ground, is_valid_identifier, parse_netlist, CardKind, Element, ElementKind, Netlist, NodeGraph,
    PhysicalValue,
};
use crate::util::{format_number, round_sig};

const SCOPE_CLOSERS: [&str; 6] = [".SUBCKT", ".END", ".DC", ".TRAN", ".PRINT", ".OPTIONS"];
const WAVEFORMS: [&str; 5] = ["PULSE", "SIN", "PWL", "EXP", "SFFM"];

struct Doc {
    lines: Vec<(String, String)>,
    logical: Vec<LogicalLine>,
}

impl Doc {
    fn new(text: &str) -> Self {
        let lines: Vec<(String, String)> = text
            .split_inclusive('\n')
            .map(|l| {
                let content = l.trim_end_matches('\n').trim_end_matches('\r');
                (content.to_string(), l[content.len()..].to_string())
            })
            .collect();
        let contents: Vec<&str> = lines.iter().map(|l| l.0.as_str()).collect();
        let (logical, _) = fold(&contents);
        Doc { lines, logical }
    }

    fn text(&self) -> String {
        self.lines.iter().map(|(c, t)| format!("{c}{t}")).collect()
    }

    /// A statement that sits on one physical line.
    fn single(&self, line_no: usize) -> Option<&LogicalLine> {
        self.logical
            .iter()
            .find(|l| l.line_no == line_no && l.kind == LineKind::Statement)
            .filter(|l| l.physical.len() == 1)
    }

    fn statements(&self) -> impl Iterator<Item = &LogicalLine> {
        self.logical.iter().filter(|l| l.kind == LineKind::Statement)
    }
}

#[derive(Debug, Clone)]
struct Mutation {
    line_no: usize,
    content: String,
    /// `None`: the last line of the mutated text.
    truth: Option<usize>,
}

fn positional(tokens: &[Token]) -> Vec<usize> {
    tokens
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, t)| !(t.text.contains('=') && !t.text.contains('(')))
        .map(|(i, _)| i)
        .collect()
}

fn line_text(doc: &Doc, ll: &LogicalLine) -> String {
    doc.lines[ll.physical[0]].0.clone()
}

fn delete_tokens(doc: &Doc, ll: &LogicalLine, idx: &[usize]) -> String {
    let mut s = line_text(doc, ll);
    let mut idx = idx.to_vec();
    idx.sort_unstable_by(|a, b| b.cmp(a));
    for i in idx {
        let t = &ll.tokens[i];
        let start = if i > 0 { ll.tokens[i - 1].end } else { t.start };
        s.replace_range(start..t.end, "");
    }
    s
}

fn replace_token(doc: &Doc, ll: &LogicalLine, i: usize, with: &str) -> String {
    let mut s = line_text(doc, ll);
    let t = &ll.tokens[i];
    s.replace_range(t.start..t.end, with);
    s
}

fn insert_after(doc: &Doc, ll: &LogicalLine, i: usize, with: &str) -> String {
    let mut s = line_text(doc, ll);
    s.insert_str(ll.tokens[i].end, &format!(" {with}"));
    s
}

struct Scope<'a> {
    elements: Vec<&'a Element>,
    graph: NodeGraph,
}

fn scopes(net: &Netlist) -> Vec<Scope<'_>> {
    let mut out = vec![Scope {
        elements: net.elements.iter().collect(),
        graph: NodeGraph::from_elements(&net.elements),
    }];
    for def in net.subcircuits.values() {
        out.push(Scope {
            elements: def.elements.iter().collect(),
            graph: NodeGraph::from_elements(&def.elements),
        });
    }
    out
}

fn value_token(ll: &LogicalLine, e: &Element) -> Option<usize> {
    let v = e.value.as_ref()?;
    positional(&ll.tokens)
        .into_iter()
        .skip(e.nodes.len())
        .find(|&i| ll.tokens[i].text == v.raw)
}

fn sites(rule: RuleId, net: &Netlist, doc: &Doc, touched: &BTreeSet<usize>) -> Vec<Mutation> {
    let free = |line: usize| -> Option<&LogicalLine> {
        if touched.contains(&line) {
            None
        } else {
            doc.single(line)
        }
    };
    let mut out = Vec::new();
    let mut push = |line_no: usize, content: String| {
        out.push(Mutation {
            line_no,
            content,
            truth: Some(line_no),
        })
    };
    let declared: BTreeSet<String> = net.model_names().iter().map(|m| m.to_ascii_lowercase()).collect();
    let referenced_in_cards: BTreeSet<String> = net
        .all_cards()
        .flat_map(|c| c.args.iter().map(|a| a.to_ascii_lowercase()))
        .collect();
    let clean_mosfet = |e: &Element| e.kind == ElementKind::Mosfet && e.nodes.len() == 4 && e.model.is_some();

    match rule {
        RuleId::MissingTransistorNode => {
            for scope in scopes(net) {
                for e in scope.elements.iter().filter(|e| clean_mosfet(e)) {
                    let bulk = &e.nodes[3];
                    if !(is_ground(bulk) || scope.graph.degree(bulk) >= 3) {
                        continue;
                    }
                    if let Some(ll) = free(e.line_no) {
                        push(e.line_no, delete_tokens(doc, ll, &[positional(&ll.tokens)[3]]));
                    }
                }
            }
        }
        RuleId::MissingEndStatement => {
            if let Some(end) = doc
                .statements()
                .last()
                .filter(|l| l.tokens[0].text.eq_ignore_ascii_case(".END") && !touched.contains(&l.line_no))
            {
                out.push(Mutation {
                    line_no: end.line_no,
                    content: String::new(),
                    truth: None,
                });
            }
        }
        RuleId::MissingTransistorModel => {
            for e in net.all_elements().filter(|e| clean_mosfet(e)) {
                if looks_like_model(&e.nodes[3], &declared) {
                    continue;
                }
                if let Some(ll) = free(e.line_no) {
                    push(e.line_no, delete_tokens(doc, ll, &[positional(&ll.tokens)[4]]));
                }
            }
        }
        RuleId::FloatingNode => {
            let printed: BTreeSet<String> = net.printed_nodes().into_iter().collect();
            let scope = &scopes(net)[0];
            let existing = net.nodes();
            for e in &scope.elements {
                let Some(ll) = free(e.line_no) else { continue };
                let pos = positional(&ll.tokens);
                for (k, n) in e.nodes.iter().enumerate().take(4) {
                    if is_ground(n) || !is_valid_identifier(n) || printed.contains(n) || scope.graph.degree(n) < 3 {
                        continue;
                    }
                    let mut renamed = format!("{n}_x");
                    while existing.contains(&renamed) {
                        renamed.push('x');
                    }
                    push(e.line_no, replace_token(doc, ll, pos[k], &renamed));
                }
            }
        }
        RuleId::ExtraTransistorNode => {
            for e in net.all_elements().filter(|e| clean_mosfet(e)) {
                if let Some(ll) = free(e.line_no) {
                    push(e.line_no, insert_after(doc, ll, positional(&ll.tokens)[3], &e.nodes[0]));
                }
            }
        }
        RuleId::IncorrectResistorValueFormat => {
            for e in net.all_elements().filter(|e| e.kind == ElementKind::Resistor) {
                let Some(v) = &e.value else { continue };
                let suffix = v.suffix_text();
                if suffix.is_empty() || suffix.chars().any(|c| c.is_ascii_uppercase()) {
                    continue;
                }
                let Some(ll) = free(e.line_no) else { continue };
                let Some(i) = value_token(ll, e) else { continue };
                let num = &v.raw[..v.raw.len() - suffix.len() - v.unit_text().len()];
                let upper = format!("{num}{}{}", suffix.to_ascii_uppercase(), v.unit_text());
                push(e.line_no, replace_token(doc, ll, i, &upper));
            }
        }
        RuleId::IncorrectSubcircuitDefinition => {
            let refs: BTreeSet<String> = net
                .all_elements()
                .filter(|e| e.kind == ElementKind::SubcktInstance)
                .filter_map(|e| e.model.as_ref().map(|m| m.to_ascii_lowercase()))
                .collect();
            for (key, def) in &net.subcircuits {
                if def.name.is_empty() || !refs.contains(key) {
                    continue;
                }
                let Some(ll) = free(def.line_no) else { continue };
                let mut renamed = format!("{}x", def.name);
                while net.subcircuit(&renamed).is_some() {
                    renamed.push('x');
                }
                push(def.line_no, replace_token(doc, ll, 1, &renamed));
            }
        }
        RuleId::MissingCapacitorValue => {
            for e in net.all_elements().filter(|e| e.kind == ElementKind::Capacitor) {
                if e.extra.is_empty() && e.nodes.len() == 2 {
                    if let Some(ll) = free(e.line_no) {
                        if let Some(i) = value_token(ll, e) {
                            push(e.line_no, delete_tokens(doc, ll, &[i]));
                        }
                    }
                }
            }
        }
        RuleId::IncorrectTransientAnalysis => {
            for c in net.all_cards().filter(|c| c.kind == CardKind::Tran) {
                let numeric = c.args.iter().take_while(|a| PhysicalValue::parse(a).is_some()).count();
                if numeric < 2 {
                    continue;
                }
                let Some(ll) = free(c.line_no) else { continue };
                push(c.line_no, format!(".tr {}", c.args[0]));
                push(c.line_no, delete_tokens(doc, ll, &(2..ll.tokens.len()).collect::<Vec<_>>()));
            }
        }
        RuleId::MissingVoltageValue => {
            for e in net.all_elements().filter(|e| e.kind == ElementKind::VSource) {
                let has_wave = e.extra.iter().any(|t| {
                    let up = t.to_ascii_uppercase();
                    up == "AC" || WAVEFORMS.iter().any(|w| up.starts_with(w))
                });
                if has_wave || e.nodes.len() != 2 {
                    continue;
                }
                let Some(ll) = free(e.line_no) else { continue };
                let Some(i) = value_token(ll, e) else { continue };
                let mut del = vec![i];
                if ll.tokens[i - 1].text.eq_ignore_ascii_case("DC") {
                    del.push(i - 1);
                }
                push(e.line_no, delete_tokens(doc, ll, &del));
            }
        }
        RuleId::SpecialCharactersInNodeNames => {
            for e in net.all_elements() {
                if referenced_in_cards.contains(&e.name.to_ascii_lowercase()) || e.name.len() < 2 {
                    continue;
                }
                if let Some(ll) = free(e.line_no) {
                    let name = format!("{}!{}", &e.name[..1], &e.name[1..]);
                    push(e.line_no, replace_token(doc, ll, 0, &name));
                }
            }
        }
        RuleId::IncorrectPrintStatement => {
            let graph = &scopes(net)[0].graph;
            for c in net.all_cards().filter(|c| c.kind == CardKind::Print) {
                let Some(ll) = free(c.line_no) else { continue };
                for (i, t) in ll.tokens.iter().enumerate().skip(1) {
                    if let Some(node) = crate::netlist::voltage_probe(&t.text) {
                        if graph.degree(&node) >= 2 && is_valid_identifier(&node) {
                            push(c.line_no, replace_token(doc, ll, i, &node));
                        }
                    }
                }
            }
        }
        RuleId::IncorrectCurrentSourceDefinition => {
            for e in net.all_elements().filter(|e| e.kind == ElementKind::ISource) {
                let Some(v) = &e.value else { continue };
                let Some(ll) = free(e.line_no) else { continue };
                let Some(i) = value_token(ll, e) else { continue };
                let milli = format!("{}M", format_number(round_sig(v.si() / 1e-3, 6)));
                push(e.line_no, replace_token(doc, ll, i, &milli));
            }
        }
        RuleId::IncorrectTransistorName => {
            for e in net.all_elements().filter(|e| clean_mosfet(e)) {
                let model = e.model.as_ref().expect("clean_mosfet has a model");
                let mut wrong = format!("{model}C");
                while declared.contains(&wrong.to_ascii_lowercase()) {
                    wrong.push('C');
                }
                if let Some(ll) = free(e.line_no) {
                    push(e.line_no, replace_token(doc, ll, positional(&ll.tokens)[4], &wrong));
                }
            }
        }
        RuleId::MissingEndsInSubcircuit => {
            let stmts: Vec<&LogicalLine> = doc.statements().collect();
            for def in net.subcircuits.values().filter(|d| d.terminated) {
                if touched.contains(&def.line_no) {
                    continue;
                }
                let Some(pos) = stmts.iter().position(|l| {
                    l.line_no > def.line_no && l.tokens[0].text.eq_ignore_ascii_case(".ENDS")
                }) else {
                    continue;
                };
                let ends = stmts[pos];
                let closes = stmts.get(pos + 1).is_some_and(|next| {
                    let head = next.tokens[0].text.to_ascii_uppercase();
                    SCOPE_CLOSERS.contains(&head.as_str())
                        || (head.starts_with('X')
                            && next.tokens.last().is_some_and(|t| t.text.eq_ignore_ascii_case(&def.name)))
                });
                if closes && free(ends.line_no).is_some() {
                    out.push(Mutation {
                        line_no: ends.line_no,
                        content: String::new(),
                        truth: Some(def.line_no),
                    });
                }
            }
        }
        RuleId::IncorrectParameterDefinition => {
            for c in net.all_cards().filter(|c| c.kind == CardKind::Param) {
                let Some(ll) = free(c.line_no) else { continue };
                for (i, t) in ll.tokens.iter().enumerate().skip(1) {
                    if let Some((k, v)) = t.text.split_once('=') {
                        if !k.is_empty() && !v.is_empty() {
                            push(c.line_no, replace_token(doc, ll, i, &format!("{k}=")));
                        }
                    }
                }
            }
        }
        RuleId::IncorrectOptionsDefinition => {
            for c in net.all_cards().filter(|c| c.kind == CardKind::Options) {
                if let Some(ll) = free(c.line_no) {
                    push(c.line_no, replace_token(doc, ll, 0, ".OPTION"));
                }
            }
        }
        RuleId::MissingDcIncrement => {
            for c in net.all_cards().filter(|c| c.kind == CardKind::Dc && c.args.len() == 4) {
                if let Some(ll) = free(c.line_no) {
                    push(c.line_no, delete_tokens(doc, ll, &[4]));
                }
            }
        }
    }
    out
}

struct Injector {
    doc: Doc,
    net: Netlist,
    touched: BTreeSet<usize>,
}

impl Injector {
    fn new(text: &str) -> Self {
        Injector {
            doc: Doc::new(text),
            net: parse_netlist(text).0,
            touched: BTreeSet::new(),
        }
    }

    fn try_rule(&mut self, rule: RuleId, rng: &mut ChaCha8Rng) -> Option<BugTruth> {
        let candidates = sites(rule, &self.net, &self.doc, &self.touched);
        if candidates.is_empty() {
            return None;
        }
        let m = candidates[rng.gen_range(0..candidates.len())].clone();
        let idx = m.line_no - 1;
        self.doc.lines[idx].0 = m.content;
        let text = self.doc.text();
        let truth = m.truth.unwrap_or_else(|| text.lines().count());
        self.touched.insert(m.line_no);
        self.touched.insert(truth);
        self.doc = Doc::new(&text);
        self.net = parse_netlist(&text).0;
        Some(BugTruth {
            rule_id: rule.id().to_string(),
            line_no: truth,
        })
    }
}

/// Rules that have at least one injection site in `n`.
pub fn injectable_rules(n: &Netlist) -> Vec<RuleId> {
    let doc = Doc::new(&n.source);
    RuleId::ALL
        .into_iter()
        .filter(|r| !sites(*r, n, &doc, &BTreeSet::new()).is_empty())
        .collect()
}

/// Inject one bug of the given rule at a seed-chosen site.
pub fn inject_rule(n: &Netlist, rule_id: &str, seed: u64) -> Result<(String, BugTruth), InjectError> {
    let rule = RuleId::from_id(rule_id).ok_or_else(|| InjectError::UnknownRule(rule_id.to_string()))?;
    let mut inj = Injector::new(&n.source);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = inj
        .try_rule(rule, &mut rng)
        .ok_or_else(|| InjectError::NoSite(rule_id.to_string()))?;
    Ok((inj.doc.text(), truth))
}

/// Inject `plan` bugs, each from a distinct rule of the requested complexity.
pub fn inject_bugs(n: &Netlist, plan: &BugPlan) -> Result<(String, InjectionRecord), InjectError> {
    let label = format!("bugs_{}", plan.seed);
    let mut record = InjectionRecord {
        kind: InjectionKind::Bugs,
        label,
        bug_truth: Vec::new(),
        trojan_components: BTreeSet::new(),
        impacted_nodes: BTreeSet::new(),
        wiring: None,
    };
    if plan.total() == 0 {
        return Ok((n.source.clone(), record));
    }
    let pre = lint(n, &Ruleset::default()).expect("default ruleset is valid");
    if !pre.is_clean() {
        let ids: BTreeSet<String> = pre.findings.iter().map(|f| f.rule_id.clone()).collect();
        return Err(InjectError::HostNotClean(ids.into_iter().collect()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut inj = Injector::new(&n.source);
    let tiers: BTreeMap<Complexity, usize> = [
        (Complexity::Easy, plan.easy),
        (Complexity::Medium, plan.medium),
        (Complexity::Difficult, plan.difficult),
    ]
    .into();
    for (complexity, want) in tiers {
        if want == 0 {
            continue;
        }
        let mut rules: Vec<RuleId> = RuleId::ALL
            .into_iter()
            .filter(|r| r.complexity() == complexity)
            .collect();
        rules.shuffle(&mut rng);
        let mut got = 0;
        for rule in rules {
            if got == want {
                break;
            }
            if let Some(t) = inj.try_rule(rule, &mut rng) {
                record.bug_truth.push(t);
                got += 1;
            }
        }
        if got < want {
            return Err(InjectError::InsufficientSites {
                complexity,
                requested: want,
                available: got,
            });
        }
    }
    record.bug_truth.sort();
    Ok((inj.doc.text(), record))
}
