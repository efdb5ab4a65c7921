use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::lexer::{fold, physical_lines, LineKind};
use super::{
    CardKind, ControlCard, Element, ElementKind, Netlist, PhysicalValue, SourceLine, SubcircuitDef,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IssueCategory {
    UnsupportedElement,
    OrphanContinuation,
    AfterEnd,
    UnterminatedSubckt,
    DuplicateSubckt,
    StrayEnds,
    MalformedElement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseIssue {
    pub line_no: usize,
    pub category: IssueCategory,
    pub message: String,
}

/// Parse netlist text. Never fails: anything outside the grammar becomes an
/// `Unknown` card or a partially filled element, with an issue attached.
pub fn parse_netlist(text: &str) -> (Netlist, Vec<ParseIssue>) {
    let lines = physical_lines(text);
    let (logical, orphans) = fold(&lines);
    let mut issues: Vec<ParseIssue> = orphans
        .into_iter()
        .map(|line_no| ParseIssue {
            line_no,
            category: IssueCategory::OrphanContinuation,
            message: "continuation line with no statement to extend".into(),
        })
        .collect();

    let declared: BTreeSet<String> = logical
        .iter()
        .filter(|l| l.kind == LineKind::Statement && l.tokens.len() >= 2)
        .filter(|l| l.tokens[0].text.eq_ignore_ascii_case(".model"))
        .map(|l| l.tokens[1].text.to_ascii_lowercase())
        .collect();

    let mut p = Parser {
        net: Netlist {
            source: text.to_string(),
            ..Netlist::default()
        },
        open: None,
        issues: Vec::new(),
    };

    for ll in &logical {
        let text = match ll.kind {
            LineKind::Statement => ll.folded_text(),
            _ => lines[ll.physical[0]].to_string(),
        };
        p.net.source_lines.push(SourceLine {
            line_no: ll.line_no,
            text,
        });
        match ll.kind {
            LineKind::Title => p.net.title = lines[0].trim().to_string(),
            LineKind::Blank | LineKind::Comment => {}
            LineKind::Statement => {
                let toks: Vec<&str> = ll.tokens.iter().map(|t| t.text.as_str()).collect();
                p.statement(&toks, ll.line_no, &declared);
            }
        }
    }
    if let Some(def) = p.open.take() {
        let line = def.line_no;
        p.issue(line, IssueCategory::UnterminatedSubckt, format!("subcircuit {} has no .ENDS", def.name));
        p.close(def);
    }
    issues.extend(p.issues);
    issues.sort_by_key(|i| i.line_no);
    (p.net, issues)
}

struct Parser {
    net: Netlist,
    open: Option<SubcircuitDef>,
    issues: Vec<ParseIssue>,
}

impl Parser {
    fn issue(&mut self, line_no: usize, category: IssueCategory, message: String) {
        self.issues.push(ParseIssue {
            line_no,
            category,
            message,
        });
    }

    fn close(&mut self, def: SubcircuitDef) {
        let key = def.name.to_ascii_lowercase();
        if self.net.subcircuits.contains_key(&key) {
            self.issue(def.line_no, IssueCategory::DuplicateSubckt, format!("subcircuit {} defined twice", def.name));
            return;
        }
        self.net.subcircuits.insert(key, def);
    }

    /// Close an open definition implicitly, at a statement that cannot belong to it.
    fn close_implicitly(&mut self, at: usize) {
        if let Some(def) = self.open.take() {
            self.issue(
                def.line_no,
                IssueCategory::UnterminatedSubckt,
                format!("subcircuit {} has no .ENDS before line {at}", def.name),
            );
            self.close(def);
        }
    }

    fn statement(&mut self, toks: &[&str], line_no: usize, declared: &BTreeSet<String>) {
        if self.net.terminated {
            self.issue(line_no, IssueCategory::AfterEnd, "statement after .END".into());
        }
        let first = toks[0];
        if first.starts_with('.') {
            let card = ControlCard {
                kind: CardKind::from_directive(first),
                directive: first.to_string(),
                args: toks[1..].iter().map(|s| s.to_string()).collect(),
                line_no,
            };
            self.card(card);
            return;
        }
        let Some(kind) = first.chars().next().and_then(ElementKind::from_prefix) else {
            self.issue(
                line_no,
                IssueCategory::UnsupportedElement,
                format!("unsupported statement `{first}`"),
            );
            self.push_card(ControlCard {
                kind: CardKind::Unknown,
                directive: first.to_string(),
                args: toks[1..].iter().map(|s| s.to_string()).collect(),
                line_no,
            });
            return;
        };
        let element = parse_element(kind, toks, line_no, declared);
        if element.nodes.is_empty() {
            self.issue(line_no, IssueCategory::MalformedElement, format!("{} has no terminals", element.name));
        }
        if kind == ElementKind::SubcktInstance {
            let calls_open = match (&self.open, &element.model) {
                (Some(def), Some(target)) => def.name.eq_ignore_ascii_case(target),
                _ => false,
            };
            if calls_open {
                self.close_implicitly(line_no);
            }
        }
        match &mut self.open {
            Some(def) => def.elements.push(element),
            None => self.net.elements.push(element),
        }
    }

    fn push_card(&mut self, card: ControlCard) {
        match &mut self.open {
            Some(def) => def.cards.push(card),
            None => self.net.cards.push(card),
        }
    }

    fn card(&mut self, card: ControlCard) {
        match card.kind {
            CardKind::Subckt => {
                self.close_implicitly(card.line_no);
                let mut args = card.args.iter();
                let name = args.next().cloned().unwrap_or_default();
                let mut ports = Vec::new();
                let mut params = BTreeMap::new();
                for a in args {
                    match a.split_once('=') {
                        Some((k, v)) => {
                            params.insert(k.to_ascii_lowercase(), v.to_string());
                        }
                        None => ports.push(a.clone()),
                    }
                }
                self.open = Some(SubcircuitDef {
                    name,
                    ports,
                    params,
                    elements: Vec::new(),
                    cards: Vec::new(),
                    line_no: card.line_no,
                    terminated: false,
                });
            }
            CardKind::Ends => match self.open.take() {
                Some(mut def) => {
                    def.terminated = true;
                    self.close(def);
                }
                None => {
                    self.issue(card.line_no, IssueCategory::StrayEnds, ".ENDS without .SUBCKT".into());
                    self.net.cards.push(card);
                }
            },
            CardKind::End => {
                self.close_implicitly(card.line_no);
                self.net.terminated = true;
            }
            CardKind::Dc | CardKind::Tran | CardKind::Print | CardKind::Options => {
                self.close_implicitly(card.line_no);
                self.net.cards.push(card);
            }
            CardKind::Model | CardKind::Param | CardKind::Unknown => self.push_card(card),
        }
    }
}

/// `NMOS`, `pch`, `nmos_lvt`-style names, or anything declared by `.MODEL`.
pub(crate) fn looks_like_model(token: &str, declared: &BTreeSet<String>) -> bool {
    let lower = token.to_ascii_lowercase();
    if declared.contains(&lower) {
        return true;
    }
    let b = lower.as_bytes();
    b.len() >= 3
        && (b[0] == b'n' || b[0] == b'p')
        && (lower[1..].starts_with("mos") || lower[1..].starts_with("ch"))
        && b.iter().all(|c| c.is_ascii_alphanumeric())
}

fn parse_element(kind: ElementKind, toks: &[&str], line_no: usize, declared: &BTreeSet<String>) -> Element {
    let mut positional: Vec<&str> = Vec::new();
    let mut params = BTreeMap::new();
    let mut extra = Vec::new();
    for t in &toks[1..] {
        if t.contains('=') && !t.contains('(') {
            let (k, v) = t.split_once('=').unwrap_or((t, ""));
            match PhysicalValue::parse(v) {
                Some(pv) if !k.is_empty() => {
                    params.insert(k.to_ascii_lowercase(), pv);
                }
                _ => extra.push(t.to_string()),
            }
        } else {
            positional.push(t);
        }
    }
    let mut el = Element {
        kind,
        name: toks[0].to_string(),
        nodes: Vec::new(),
        model: None,
        value: None,
        params,
        extra: Vec::new(),
        line_no,
    };
    match kind {
        ElementKind::Mosfet => {
            let has_model = match positional.last() {
                Some(_) if positional.len() >= 5 => true,
                Some(last) => looks_like_model(last, declared),
                None => false,
            };
            if has_model {
                el.model = positional.pop().map(str::to_string);
            }
            el.nodes = positional.iter().map(|s| s.to_string()).collect();
        }
        ElementKind::SubcktInstance => {
            el.model = positional.pop().map(str::to_string);
            el.nodes = positional.iter().map(|s| s.to_string()).collect();
        }
        ElementKind::Resistor | ElementKind::Capacitor => {
            let split = positional.len().min(2);
            el.nodes = positional[..split].iter().map(|s| s.to_string()).collect();
            let mut rest = positional[split..].iter();
            if let Some(first) = rest.next() {
                match PhysicalValue::parse(first) {
                    Some(v) => el.value = Some(v),
                    None => el.extra.push(first.to_string()),
                }
            }
            el.extra.extend(rest.map(|s| s.to_string()));
        }
        ElementKind::VSource | ElementKind::ISource => {
            let split = positional.len().min(2);
            el.nodes = positional[..split].iter().map(|s| s.to_string()).collect();
            let mut rest = positional[split..].iter().peekable();
            while let Some(t) = rest.next() {
                let upper = t.to_ascii_uppercase();
                if upper == "DC" {
                    if let Some(v) = rest.peek().and_then(|n| PhysicalValue::parse(n)) {
                        if el.value.is_none() {
                            el.value = Some(v);
                            rest.next();
                            continue;
                        }
                    }
                    el.extra.push(t.to_string());
                } else if upper == "AC" {
                    el.extra.push(t.to_string());
                    if rest.peek().is_some_and(|n| PhysicalValue::parse(n).is_some()) {
                        el.extra.push(rest.next().unwrap().to_string());
                    }
                } else if el.value.is_none() && PhysicalValue::parse(t).is_some() {
                    el.value = PhysicalValue::parse(t);
                } else {
                    el.extra.push(t.to_string());
                }
            }
        }
    }
    el.extra.extend(extra);
    el
}
