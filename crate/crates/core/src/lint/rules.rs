//! The eighteen syntax rules. Each rule inspects the parsed netlist and
//! reports at most one finding per offending line.

use std::collections::{BTreeMap, BTreeSet};

use super::{Complexity, FixAction, FixSuggestion, LintFinding};
use crate::netlist::lexer::{fold, physical_lines, tokenize};
use crate::netlist::{
    is_ground, is_valid_identifier, CardKind, Element, ElementKind, Netlist, NodeGraph,
    PhysicalValue, Suffix,
};
use crate::util::{format_number, levenshtein, round_sig};

macro_rules! rule_table {
    ($( $variant:ident => $id:literal, $cx:ident, $desc:literal; )*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum RuleId { $( $variant ),* }

        impl RuleId {
            pub const ALL: [RuleId; 18] = [ $( RuleId::$variant ),* ];

            pub fn id(self) -> &'static str {
                match self { $( RuleId::$variant => $id ),* }
            }

            pub fn complexity(self) -> Complexity {
                match self { $( RuleId::$variant => Complexity::$cx ),* }
            }

            pub fn description(self) -> &'static str {
                match self { $( RuleId::$variant => $desc ),* }
            }
        }
    };
}

rule_table! {
    MissingTransistorNode => "missing-transistor-node", Easy,
        "A MOSFET line must list four terminals (drain, gate, source, bulk) before its model name.";
    MissingEndStatement => "missing-end-statement", Easy,
        "The netlist must terminate with a .END statement.";
    MissingTransistorModel => "missing-transistor-model", Easy,
        "A MOSFET line must end with a model name after its four terminals.";
    FloatingNode => "floating-node", Easy,
        "Every node other than ground must connect to at least two element terminals, unless it is a subcircuit port or a printed output.";
    ExtraTransistorNode => "extra-transistor-node", Medium,
        "A MOSFET line must not list more than four terminals.";
    IncorrectResistorValueFormat => "incorrect-resistor-value-format", Medium,
        "Resistor values must use lower-case scale suffixes (1k, not 1K).";
    IncorrectSubcircuitDefinition => "incorrect-subcircuit-definition", Medium,
        "Every .SUBCKT must carry a name, and every X instance must name a defined subcircuit.";
    MissingCapacitorValue => "missing-capacitor-value", Medium,
        "A capacitor line must give a capacitance after its two nodes.";
    IncorrectTransientAnalysis => "incorrect-transient-analysis", Medium,
        "Transient analysis is written .TRAN <tstep> <tstop>; both the step and the simulation duration are required.";
    MissingVoltageValue => "missing-voltage-value", Medium,
        "A voltage source must give a DC value or a waveform after its two nodes.";
    SpecialCharactersInNodeNames => "special-characters-in-node-names", Difficult,
        "Element and node names may contain only letters, digits and underscores.";
    IncorrectPrintStatement => "incorrect-print-statement", Difficult,
        "Each .PRINT output must be an access function such as V(node) or I(device), not a bare node name.";
    IncorrectCurrentSourceDefinition => "incorrect-current-source", Difficult,
        "A current source value must not use the bare suffix M, which is ambiguous between milli (m) and mega (meg).";
    IncorrectTransistorName => "incorrect-transistor-name", Difficult,
        "A MOSFET model name must be NMOS, PMOS or a name declared by a .MODEL card.";
    MissingEndsInSubcircuit => "missing-ends", Difficult,
        "Every .SUBCKT definition must be closed by a matching .ENDS.";
    IncorrectParameterDefinition => "incorrect-parameter-definition", Difficult,
        "Each .PARAM entry must have the form name=value with a non-empty value.";
    IncorrectOptionsDefinition => "incorrect-options-directive", Difficult,
        "Simulator options are set with .OPTIONS (not .OPTION or other spellings).";
    MissingDcIncrement => "missing-dc-increment", Difficult,
        "A .DC sweep needs a source, a start value, a stop value and an increment.";
}

impl RuleId {
    pub fn from_id(id: &str) -> Option<RuleId> {
        RuleId::ALL.into_iter().find(|r| r.id() == id)
    }
}

const BUILTIN_MODELS: [&str; 2] = ["NMOS", "PMOS"];
const WAVEFORMS: [&str; 5] = ["PULSE", "SIN", "PWL", "EXP", "SFFM"];
const PRINT_ANALYSES: [&str; 4] = ["TRAN", "DC", "AC", "OP"];
const OUTPUT_FUNCTIONS: [&str; 11] = ["V", "I", "VM", "VDB", "VP", "VR", "VI", "IM", "IP", "IR", "II"];

/// Per-netlist lookup tables shared by all rules.
pub(crate) struct Ctx<'a> {
    pub net: &'a Netlist,
    declared: BTreeSet<String>,
    snippets: BTreeMap<usize, String>,
    tokens: BTreeMap<usize, Vec<String>>,
    last_physical: BTreeMap<usize, usize>,
    physical_count: usize,
}

impl<'a> Ctx<'a> {
    pub fn new(net: &'a Netlist) -> Self {
        let mut snippets = BTreeMap::new();
        let mut tokens = BTreeMap::new();
        for sl in &net.source_lines {
            snippets.insert(sl.line_no, sl.text.clone());
            tokens.insert(sl.line_no, tokenize(&sl.text));
        }
        let lines = physical_lines(&net.source);
        let (logical, _) = fold(&lines);
        let last_physical = logical
            .iter()
            .map(|l| (l.line_no, l.physical.last().map_or(l.line_no, |p| p + 1)))
            .collect();
        Ctx {
            net,
            declared: net.model_names().iter().map(|m| m.to_ascii_lowercase()).collect(),
            snippets,
            tokens,
            last_physical,
            physical_count: lines.len(),
        }
    }

    pub fn snippet(&self, line_no: usize) -> String {
        self.snippets.get(&line_no).cloned().unwrap_or_default()
    }

    fn toks(&self, line_no: usize) -> &[String] {
        self.tokens.get(&line_no).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Indices of non-parameter tokens after the leading name.
    fn positional(&self, line_no: usize) -> Vec<usize> {
        self.toks(line_no)
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, t)| !(t.contains('=') && !t.contains('(')))
            .map(|(i, _)| i)
            .collect()
    }

    fn value_index(&self, e: &Element) -> Option<usize> {
        let v = e.value.as_ref()?;
        self.positional(e.line_no)
            .into_iter()
            .skip(e.nodes.len())
            .find(|&i| self.toks(e.line_no)[i] == v.raw)
    }

    fn is_valid_model(&self, model: &str) -> bool {
        self.declared.contains(&model.to_ascii_lowercase())
            || BUILTIN_MODELS.iter().any(|b| b.eq_ignore_ascii_case(model))
    }

    fn finding(
        &self,
        rule: RuleId,
        line_no: usize,
        subject: impl Into<String>,
        message: String,
        suggestion: Option<FixSuggestion>,
    ) -> LintFinding {
        LintFinding {
            rule_id: rule.id().to_string(),
            line_no,
            element_or_card: subject.into(),
            snippet: self.snippet(line_no),
            message,
            suggestion,
        }
    }
}

fn replace(tokens: (usize, usize), payload: impl Into<String>) -> Option<FixSuggestion> {
    Some(FixSuggestion {
        action: FixAction::ReplaceToken,
        payload: payload.into(),
        tokens: Some(tokens),
        after_line: None,
    })
}

fn insert(at: usize, payload: impl Into<String>) -> Option<FixSuggestion> {
    Some(FixSuggestion {
        action: FixAction::InsertToken,
        payload: payload.into(),
        tokens: Some((at, at)),
        after_line: None,
    })
}

fn append_after(line: usize, payload: impl Into<String>) -> Option<FixSuggestion> {
    Some(FixSuggestion {
        action: FixAction::AppendLine,
        payload: payload.into(),
        tokens: None,
        after_line: Some(line),
    })
}

/// `x` in engineering notation with a canonical suffix, 6 significant digits.
pub(crate) fn engineering(x: f64) -> String {
    const SCALES: [(f64, Option<Suffix>); 9] = [
        (1e9, Some(Suffix::G)),
        (1e6, Some(Suffix::Meg)),
        (1e3, Some(Suffix::K)),
        (1.0, None),
        (1e-3, Some(Suffix::M)),
        (1e-6, Some(Suffix::U)),
        (1e-9, Some(Suffix::N)),
        (1e-12, Some(Suffix::P)),
        (1e-15, Some(Suffix::F)),
    ];
    if x == 0.0 || !x.is_finite() {
        return "0".into();
    }
    let (mult, suffix) = SCALES
        .iter()
        .copied()
        .find(|(m, _)| x.abs() >= *m * 0.999_999_5)
        .unwrap_or((1e-15, Some(Suffix::F)));
    format!(
        "{}{}",
        format_number(round_sig(x / mult, 6)),
        suffix.map(Suffix::canonical).unwrap_or("")
    )
}

fn nearest<'s>(target: &str, candidates: impl IntoIterator<Item = &'s String>) -> Option<String> {
    candidates
        .into_iter()
        .map(|c| (levenshtein(&target.to_ascii_lowercase(), &c.to_ascii_lowercase()), c))
        .min()
        .map(|(_, c)| c.clone())
}

impl RuleId {
    pub(crate) fn check(self, ctx: &Ctx) -> Vec<LintFinding> {
        match self {
            RuleId::MissingTransistorNode => missing_transistor_node(ctx),
            RuleId::MissingEndStatement => missing_end(ctx),
            RuleId::MissingTransistorModel => missing_model(ctx),
            RuleId::FloatingNode => floating_node(ctx),
            RuleId::ExtraTransistorNode => extra_transistor_node(ctx),
            RuleId::IncorrectResistorValueFormat => resistor_format(ctx),
            RuleId::IncorrectSubcircuitDefinition => subcircuit_definition(ctx),
            RuleId::MissingCapacitorValue => missing_capacitor_value(ctx),
            RuleId::IncorrectTransientAnalysis => transient_analysis(ctx),
            RuleId::MissingVoltageValue => missing_voltage_value(ctx),
            RuleId::SpecialCharactersInNodeNames => special_characters(ctx),
            RuleId::IncorrectPrintStatement => print_statement(ctx),
            RuleId::IncorrectCurrentSourceDefinition => current_source(ctx),
            RuleId::IncorrectTransistorName => transistor_name(ctx),
            RuleId::MissingEndsInSubcircuit => missing_ends(ctx),
            RuleId::IncorrectParameterDefinition => parameter_definition(ctx),
            RuleId::IncorrectOptionsDefinition => options_directive(ctx),
            RuleId::MissingDcIncrement => dc_increment(ctx),
        }
    }
}

fn mosfets<'a>(ctx: &'a Ctx) -> impl Iterator<Item = &'a Element> {
    ctx.net
        .all_elements()
        .filter(|e| e.kind == ElementKind::Mosfet)
}

fn missing_transistor_node(ctx: &Ctx) -> Vec<LintFinding> {
    let rule = RuleId::MissingTransistorNode;
    mosfets(ctx)
        .filter(|m| m.nodes.len() < 4)
        .map(|m| {
            let suggestion = match (&m.model, m.nodes.len()) {
                // Source doubles as bulk, the usual tie.
                (Some(_), 3) => insert(ctx.positional(m.line_no)[3], m.nodes[2].clone()),
                _ => None,
            };
            ctx.finding(
                rule,
                m.line_no,
                &m.name,
                format!("{} lists {} of 4 terminals (drain, gate, source, bulk)", m.name, m.nodes.len()),
                suggestion,
            )
        })
        .collect()
}

fn missing_end(ctx: &Ctx) -> Vec<LintFinding> {
    let net = ctx.net;
    let has_statements = !net.elements.is_empty() || !net.cards.is_empty() || !net.subcircuits.is_empty();
    if net.terminated || !has_statements {
        return Vec::new();
    }
    let last = net.source_lines.last().map_or(1, |l| l.line_no);
    vec![ctx.finding(
        RuleId::MissingEndStatement,
        last,
        ".END",
        "netlist is not terminated by .END".into(),
        append_after(ctx.physical_count, ".END"),
    )]
}

/// Model a MOSFET most plausibly wants: NMOS when its bulk is grounded, PMOS otherwise.
fn guess_model(ctx: &Ctx, m: &Element) -> String {
    let polarity = match m.nodes.get(3).or(m.nodes.last()) {
        Some(b) if is_ground(b) => "NMOS",
        _ => "PMOS",
    };
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for other in mosfets(ctx) {
        if let Some(model) = &other.model {
            if ctx.is_valid_model(model) && model_polarity(ctx.net, model).as_deref() == Some(polarity) {
                *counts.entry(model.clone()).or_default() += 1;
            }
        }
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(m, _)| m)
        .or_else(|| ctx.net.model_for_polarity(polarity))
        .unwrap_or_else(|| polarity.to_string())
}

fn model_polarity(net: &Netlist, model: &str) -> Option<String> {
    if let Some(b) = BUILTIN_MODELS.iter().find(|b| b.eq_ignore_ascii_case(model)) {
        return Some(b.to_string());
    }
    net.all_cards()
        .filter(|c| c.kind == CardKind::Model && c.args.len() >= 2)
        .find(|c| c.args[0].eq_ignore_ascii_case(model))
        .and_then(|c| {
            let kind = c.args[1].to_ascii_uppercase();
            BUILTIN_MODELS.iter().find(|b| kind.starts_with(*b)).map(|b| b.to_string())
        })
}

fn missing_model(ctx: &Ctx) -> Vec<LintFinding> {
    mosfets(ctx)
        .filter(|m| m.model.is_none() && !m.nodes.is_empty())
        .map(|m| {
            let pos = ctx.positional(m.line_no);
            let at = pos.get(m.nodes.len() - 1).map_or(1, |i| i + 1);
            ctx.finding(
                RuleId::MissingTransistorModel,
                m.line_no,
                &m.name,
                format!("{} has no model name", m.name),
                insert(at, guess_model(ctx, m)),
            )
        })
        .collect()
}

fn floating_node(ctx: &Ctx) -> Vec<LintFinding> {
    let printed: BTreeSet<String> = ctx.net.printed_nodes().into_iter().collect();
    let mut out = Vec::new();
    let mut scan = |elements: &[Element], exempt: &BTreeSet<String>| {
        // Terminals past a MOSFET's fourth belong to extra-transistor-node.
        let trimmed: Vec<Element> = elements
            .iter()
            .map(|e| {
                let mut e = e.clone();
                if e.kind == ElementKind::Mosfet {
                    e.nodes.truncate(4);
                }
                e
            })
            .collect();
        let graph = NodeGraph::from_elements(&trimmed);
        let mut by_line: BTreeMap<usize, (&Element, Vec<&String>)> = BTreeMap::new();
        for e in &trimmed {
            for n in &e.nodes {
                if graph.degree(n) == 1
                    && !is_ground(n)
                    && is_valid_identifier(n)
                    && !exempt.contains(n)
                    && !printed.contains(n)
                {
                    by_line.entry(e.line_no).or_insert((e, Vec::new())).1.push(n);
                }
            }
        }
        let anchors: Vec<String> = graph
            .nodes
            .iter()
            .filter(|n| graph.degree(n) >= 2 || is_ground(n) || exempt.contains(*n))
            .cloned()
            .collect();
        for (line, (e, nodes)) in by_line {
            let node = nodes[0];
            let suggestion = repair_target(node, &anchors).and_then(|to| {
                let idx = e.nodes.iter().position(|x| x == node)?;
                let tok = *ctx.positional(line).get(idx)?;
                replace((tok, tok + 1), to)
            });
            let names: Vec<&str> = nodes.iter().map(|s| s.as_str()).collect();
            out.push(ctx.finding(
                RuleId::FloatingNode,
                line,
                node.clone(),
                format!("node {} connects to a single terminal of {}", names.join(", "), e.name),
                suggestion,
            ));
        }
    };
    scan(&ctx.net.elements, &BTreeSet::new());
    for def in ctx.net.subcircuits.values() {
        let ports: BTreeSet<String> = def.ports.iter().cloned().collect();
        scan(&def.elements, &ports);
    }
    out
}

/// Likely intended node for a typo'd one: the longest existing node that
/// prefixes it, else the closest by edit distance.
fn repair_target(node: &str, anchors: &[String]) -> Option<String> {
    let prefixed = anchors
        .iter()
        .filter(|a| a.as_str() != node && node.starts_with(a.as_str()))
        .max_by_key(|a| a.len());
    if let Some(p) = prefixed {
        return Some(p.clone());
    }
    anchors
        .iter()
        .filter(|a| a.as_str() != node)
        .map(|a| (levenshtein(node, a), a))
        .filter(|(d, _)| *d <= 2.max(node.len() / 2))
        .min()
        .map(|(_, a)| a.clone())
}

fn extra_transistor_node(ctx: &Ctx) -> Vec<LintFinding> {
    mosfets(ctx)
        .filter(|m| m.nodes.len() > 4)
        .map(|m| {
            let pos = ctx.positional(m.line_no);
            let suggestion = (pos.len() >= m.nodes.len()).then(|| FixSuggestion {
                action: FixAction::DeleteToken,
                payload: m.nodes[4..].join(" "),
                tokens: Some((pos[4], pos[m.nodes.len() - 1] + 1)),
                after_line: None,
            });
            ctx.finding(
                RuleId::ExtraTransistorNode,
                m.line_no,
                &m.name,
                format!("{} lists {} terminals; extra: {}", m.name, m.nodes.len(), m.nodes[4..].join(" ")),
                suggestion,
            )
        })
        .collect()
}

fn resistor_format(ctx: &Ctx) -> Vec<LintFinding> {
    ctx.net
        .all_elements()
        .filter(|e| e.kind == ElementKind::Resistor)
        .filter_map(|r| {
            let v = r.value.as_ref()?;
            if !v.suffix_text().chars().any(|c| c.is_ascii_uppercase()) {
                return None;
            }
            let fixed = v.canonical_raw();
            let suggestion = ctx.value_index(r).and_then(|i| replace((i, i + 1), fixed.clone()));
            Some(ctx.finding(
                RuleId::IncorrectResistorValueFormat,
                r.line_no,
                &r.name,
                format!("{} value {} should be written {}", r.name, v.raw, fixed),
                suggestion,
            ))
        })
        .collect()
}

fn subcircuit_definition(ctx: &Ctx) -> Vec<LintFinding> {
    let rule = RuleId::IncorrectSubcircuitDefinition;
    let net = ctx.net;
    let mut findings = Vec::new();
    let instances: Vec<&Element> = net
        .all_elements()
        .filter(|e| e.kind == ElementKind::SubcktInstance)
        .collect();
    let referenced: BTreeSet<String> = instances
        .iter()
        .filter_map(|x| x.model.as_ref())
        .map(|m| m.to_ascii_lowercase())
        .collect();
    let mut undefined: Vec<&Element> = instances
        .iter()
        .copied()
        .filter(|x| x.model.as_ref().is_some_and(|m| net.subcircuit(m).is_none()))
        .collect();
    let mut unreferenced: Vec<String> = net
        .subcircuits
        .iter()
        .filter(|(key, d)| !d.name.is_empty() && !referenced.contains(*key))
        .map(|(_, d)| d.name.clone())
        .collect();

    for def in net.subcircuits.values().filter(|d| d.name.is_empty()) {
        let target = undefined.first().and_then(|x| x.model.clone());
        let suggestion = target.clone().and_then(|t| insert(1, t));
        findings.push(ctx.finding(
            rule,
            def.line_no,
            ".SUBCKT",
            ".SUBCKT definition has no name".into(),
            suggestion,
        ));
        if let Some(t) = target {
            undefined.retain(|x| x.model.as_deref() != Some(t.as_str()));
        }
    }

    let mut seen_refs = BTreeSet::new();
    for x in undefined {
        let target = x.model.clone().unwrap_or_default();
        if !seen_refs.insert(target.to_ascii_lowercase()) {
            continue;
        }
        match nearest(&target, unreferenced.iter()) {
            Some(def_name) => {
                unreferenced.retain(|n| n != &def_name);
                let def = net.subcircuit(&def_name).expect("unreferenced name comes from the map");
                let suggestion = Some(FixSuggestion {
                    action: FixAction::RenameIdentifier,
                    payload: target.clone(),
                    tokens: Some((1, 2)),
                    after_line: None,
                });
                findings.push(ctx.finding(
                    rule,
                    def.line_no,
                    format!(".SUBCKT {}", def.name),
                    format!(
                        "subcircuit is defined as {} but instantiated as {} (by {})",
                        def.name, target, x.name
                    ),
                    suggestion,
                ));
            }
            None => findings.push(ctx.finding(
                rule,
                x.line_no,
                &x.name,
                format!("{} instantiates undefined subcircuit {}", x.name, target),
                None,
            )),
        }
    }
    findings
}

fn missing_capacitor_value(ctx: &Ctx) -> Vec<LintFinding> {
    let caps: Vec<&Element> = ctx
        .net
        .all_elements()
        .filter(|e| e.kind == ElementKind::Capacitor)
        .collect();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for c in &caps {
        if let Some(v) = &c.value {
            *counts.entry(v.raw.clone()).or_default() += 1;
        }
    }
    let typical = counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map_or_else(|| "1p".to_string(), |(v, _)| v);
    caps.into_iter()
        .filter(|c| c.value.is_none() && c.extra.is_empty())
        .map(|c| {
            let pos = ctx.positional(c.line_no);
            let suggestion = match (c.nodes.len(), pos.get(1)) {
                (2, Some(p)) => insert(p + 1, typical.clone()),
                _ => None,
            };
            ctx.finding(
                RuleId::MissingCapacitorValue,
                c.line_no,
                &c.name,
                format!("{} has no capacitance", c.name),
                suggestion,
            )
        })
        .collect()
}

fn transient_analysis(ctx: &Ctx) -> Vec<LintFinding> {
    let mut out = Vec::new();
    for card in ctx.net.all_cards() {
        let lower = card.directive.to_ascii_lowercase();
        let abbreviated = card.kind == CardKind::Unknown && lower.len() >= 3 && ".tran".starts_with(&lower) && lower != ".tran";
        let numeric: Vec<PhysicalValue> = card.args.iter().filter_map(|a| PhysicalValue::parse(a)).collect();
        let short = numeric.len() < 2;
        if !(abbreviated || (card.kind == CardKind::Tran && short)) {
            continue;
        }
        let tstep = numeric.first().map_or_else(|| "1n".to_string(), |v| v.raw.clone());
        let tstop = match numeric.get(1) {
            Some(v) => v.raw.clone(),
            None => engineering(numeric.first().map_or(1e-9, PhysicalValue::si) * 1000.0),
        };
        let mut fixed = vec![".TRAN".to_string(), tstep, tstop];
        fixed.extend(card.args.iter().skip(numeric.len().min(2)).cloned());
        let message = if short {
            format!("{} gives no simulation duration", card.directive)
        } else {
            format!("{} is not a transient analysis directive", card.directive)
        };
        out.push(ctx.finding(
            RuleId::IncorrectTransientAnalysis,
            card.line_no,
            card.directive.clone(),
            message,
            replace((0, 1 + card.args.len()), fixed.join(" ")),
        ));
    }
    out
}

fn missing_voltage_value(ctx: &Ctx) -> Vec<LintFinding> {
    ctx.net
        .all_elements()
        .filter(|e| e.kind == ElementKind::VSource && e.value.is_none())
        .filter(|v| {
            !v.extra.iter().any(|t| {
                let up = t.to_ascii_uppercase();
                up == "AC" || WAVEFORMS.iter().any(|w| up.starts_with(w))
            })
        })
        .map(|v| {
            let pos = ctx.positional(v.line_no);
            let suggestion = match (v.nodes.len(), pos.get(1)) {
                (2, Some(p)) => insert(p + 1, "0"),
                _ => None,
            };
            ctx.finding(
                RuleId::MissingVoltageValue,
                v.line_no,
                &v.name,
                format!("{} has no DC value or waveform", v.name),
                suggestion,
            )
        })
        .collect()
}

fn sanitize(name: &str) -> String {
    let cleaned: String = name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric() || *c == '_')
        .collect();
    if cleaned.is_empty() {
        "n".into()
    } else {
        cleaned
    }
}

fn special_characters(ctx: &Ctx) -> Vec<LintFinding> {
    ctx.net
        .all_elements()
        .filter_map(|e| {
            let pos = ctx.positional(e.line_no);
            let (idx, bad) = if !is_valid_identifier(&e.name) {
                (0, e.name.clone())
            } else {
                let k = e.nodes.iter().position(|n| !is_valid_identifier(n))?;
                (*pos.get(k)?, e.nodes[k].clone())
            };
            let mut fixed = sanitize(&bad);
            if idx == 0 && !fixed.starts_with(e.kind.prefix()) && !fixed.starts_with(e.kind.prefix().to_ascii_lowercase()) {
                fixed.insert(0, e.kind.prefix());
            }
            Some(ctx.finding(
                RuleId::SpecialCharactersInNodeNames,
                e.line_no,
                bad.clone(),
                format!("`{bad}` contains characters other than letters, digits and underscores"),
                replace((idx, idx + 1), fixed),
            ))
        })
        .collect()
}

fn is_output_function(tok: &str) -> bool {
    let Some(open) = tok.find('(') else { return false };
    tok.ends_with(')')
        && open + 2 < tok.len()
        && OUTPUT_FUNCTIONS.iter().any(|f| f.eq_ignore_ascii_case(&tok[..open]))
}

fn print_statement(ctx: &Ctx) -> Vec<LintFinding> {
    let mut out = Vec::new();
    for card in ctx.net.all_cards().filter(|c| c.kind == CardKind::Print) {
        let skip = usize::from(
            card.args
                .first()
                .is_some_and(|a| PRINT_ANALYSES.iter().any(|p| p.eq_ignore_ascii_case(a))),
        );
        let vars = &card.args[skip..];
        let bad: Vec<&String> = vars.iter().filter(|v| !is_output_function(v)).collect();
        if bad.is_empty() {
            continue;
        }
        let fixed: Vec<String> = vars
            .iter()
            .map(|v| if is_output_function(v) { v.clone() } else { format!("V({v})") })
            .collect();
        let first = 1 + skip;
        out.push(ctx.finding(
            RuleId::IncorrectPrintStatement,
            card.line_no,
            card.directive.clone(),
            format!(
                ".PRINT outputs {} must use an access function such as V(...)",
                bad.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
            ),
            replace((first, first + vars.len()), fixed.join(" ")),
        ));
    }
    out
}

fn current_source(ctx: &Ctx) -> Vec<LintFinding> {
    ctx.net
        .all_elements()
        .filter(|e| e.kind == ElementKind::ISource)
        .filter_map(|i| {
            let v = i.value.as_ref()?;
            if v.suffix_text() != "M" {
                return None;
            }
            let fixed = v.canonical_raw();
            let suggestion = ctx.value_index(i).and_then(|k| replace((k, k + 1), fixed.clone()));
            Some(ctx.finding(
                RuleId::IncorrectCurrentSourceDefinition,
                i.line_no,
                &i.name,
                format!(
                    "{} value {} is ambiguous; write {} for milliamps or {}meg for megamps",
                    i.name, v.raw, fixed, &v.raw[..v.raw.len() - v.suffix_text().len() - v.unit_text().len()]
                ),
                suggestion,
            ))
        })
        .collect()
}

fn transistor_name(ctx: &Ctx) -> Vec<LintFinding> {
    let mut valid: Vec<String> = BUILTIN_MODELS.iter().map(|s| s.to_string()).collect();
    valid.extend(ctx.net.model_names());
    mosfets(ctx)
        .filter_map(|m| {
            let model = m.model.as_ref()?;
            if ctx.is_valid_model(model) {
                return None;
            }
            let pos = ctx.positional(m.line_no);
            let suggestion = nearest(model, valid.iter()).and_then(|to| {
                let i = *pos.get(m.nodes.len())?;
                replace((i, i + 1), to)
            });
            Some(ctx.finding(
                RuleId::IncorrectTransistorName,
                m.line_no,
                &m.name,
                format!("{} uses undeclared model {}", m.name, model),
                suggestion,
            ))
        })
        .collect()
}

fn missing_ends(ctx: &Ctx) -> Vec<LintFinding> {
    ctx.net
        .subcircuits
        .values()
        .filter(|d| !d.terminated)
        .map(|def| {
            let last_stmt = def
                .elements
                .iter()
                .map(|e| e.line_no)
                .chain(def.cards.iter().map(|c| c.line_no))
                .max()
                .unwrap_or(def.line_no);
            let after = ctx.last_physical.get(&last_stmt).copied().unwrap_or(last_stmt);
            let closer = if def.name.is_empty() {
                ".ENDS".to_string()
            } else {
                format!(".ENDS {}", def.name)
            };
            ctx.finding(
                RuleId::MissingEndsInSubcircuit,
                def.line_no,
                format!(".SUBCKT {}", def.name),
                format!("subcircuit {} is not closed by .ENDS", def.name),
                append_after(after, closer),
            )
        })
        .collect()
}

fn parameter_definition(ctx: &Ctx) -> Vec<LintFinding> {
    let mut out = Vec::new();
    for card in ctx.net.all_cards().filter(|c| c.kind == CardKind::Param) {
        if card.args.is_empty() {
            out.push(ctx.finding(
                RuleId::IncorrectParameterDefinition,
                card.line_no,
                card.directive.clone(),
                ".PARAM defines nothing".into(),
                None,
            ));
            continue;
        }
        let bad = card.args.iter().enumerate().find(|(_, a)| match a.split_once('=') {
            Some((k, v)) => !is_valid_identifier(k) || v.is_empty(),
            None => true,
        });
        let Some((i, arg)) = bad else { continue };
        let key = arg.split('=').next().unwrap_or_default();
        let suggestion = if is_valid_identifier(key) {
            replace((i + 1, i + 2), format!("{key}=1"))
        } else {
            None
        };
        out.push(ctx.finding(
            RuleId::IncorrectParameterDefinition,
            card.line_no,
            card.directive.clone(),
            format!("parameter entry `{arg}` is not of the form name=value"),
            suggestion,
        ));
    }
    out
}

fn options_directive(ctx: &Ctx) -> Vec<LintFinding> {
    ctx.net
        .all_cards()
        .filter(|c| c.kind == CardKind::Unknown && c.directive.starts_with('.'))
        .filter(|c| {
            let up = c.directive.to_ascii_uppercase();
            up.starts_with(".OPT") || levenshtein(&up, ".OPTIONS") <= 2
        })
        .map(|c| {
            ctx.finding(
                RuleId::IncorrectOptionsDefinition,
                c.line_no,
                c.directive.clone(),
                format!("{} should be .OPTIONS", c.directive),
                replace((0, 1), ".OPTIONS"),
            )
        })
        .collect()
}

fn dc_increment(ctx: &Ctx) -> Vec<LintFinding> {
    let mut out = Vec::new();
    for card in ctx.net.all_cards().filter(|c| c.kind == CardKind::Dc) {
        let n = card.args.len();
        if n >= 4 && n % 4 == 0 {
            continue;
        }
        let suggestion = if n == 3 {
            match (PhysicalValue::parse(&card.args[1]), PhysicalValue::parse(&card.args[2])) {
                (Some(a), Some(b)) if a.si() != b.si() => insert(4, engineering((b.si() - a.si()).abs() / 100.0)),
                _ => None,
            }
        } else {
            None
        };
        out.push(ctx.finding(
            RuleId::MissingDcIncrement,
            card.line_no,
            card.directive.clone(),
            format!(".DC sweep `{}` is missing its increment", card.args.join(" ")),
            suggestion,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_counts() {
        let count = |c| RuleId::ALL.iter().filter(|r| r.complexity() == c).count();
        assert_eq!(count(Complexity::Easy), 4);
        assert_eq!(count(Complexity::Medium), 6);
        assert_eq!(count(Complexity::Difficult), 8);
        let ids: BTreeSet<&str> = RuleId::ALL.iter().map(|r| r.id()).collect();
        assert_eq!(ids.len(), 18);
    }

    #[test]
    fn engineering_notation() {
        assert_eq!(engineering(1e-7), "100n");
        assert_eq!(engineering(0.049), "49m");
        assert_eq!(engineering(1.8), "1.8");
        assert_eq!(engineering(2.2e6), "2.2meg");
    }
}
