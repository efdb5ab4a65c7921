use std::collections::BTreeSet;
use std::sync::OnceLock;

use amscheck::detect::DetectionReport;
use amscheck::lint::{LintFinding, RuleId};
use regex::Regex;
use serde::{Deserialize, Serialize};

/// Rule id given to claims whose rule could not be recognized.
pub const UNCLASSIFIED: &str = "unclassified";

fn line_ref() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(?:lines?|ln|l)\s*\.?\s*#?\s*(\d+)\b").unwrap())
}

fn fix_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)(?:[;.,(]\s*)?\b(?:fix|suggested fix|suggestion|correction|corrected|should be|change it to|change to|replace with)\b\s*:?\s*|\s*(?:->|=>|→)\s*").unwrap()
    })
}

fn list_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(?:[-*•+]|\d+[.)]|\(\d+\)|#+)\s*").unwrap())
}

fn informative(s: &str) -> bool {
    s.chars().any(|c| c.is_alphanumeric())
}

fn strip_markup(s: &str) -> String {
    let s = list_marker().replace(s, "");
    s.replace("**", "").replace('`', "").trim().to_string()
}

/// Phrase cues for rules a model names in prose rather than by id. Checked
/// in order; the first hit wins.
const CUES: &[(&[&str], RuleId)] = &[
    (&["floating"], RuleId::FloatingNode),
    (&["extra", "node"], RuleId::ExtraTransistorNode),
    (&["extra", "terminal"], RuleId::ExtraTransistorNode),
    (&["too many", "node"], RuleId::ExtraTransistorNode),
    (&["special character"], RuleId::SpecialCharactersInNodeNames),
    (&["invalid character"], RuleId::SpecialCharactersInNodeNames),
    (&[".ends"], RuleId::MissingEndsInSubcircuit),
    (&["subcircuit", "not closed"], RuleId::MissingEndsInSubcircuit),
    (&[".end"], RuleId::MissingEndStatement),
    (&["end statement"], RuleId::MissingEndStatement),
    (&["missing", "model"], RuleId::MissingTransistorModel),
    (&["model"], RuleId::IncorrectTransistorName),
    (&["missing", "node"], RuleId::MissingTransistorNode),
    (&["missing", "terminal"], RuleId::MissingTransistorNode),
    (&["resistor"], RuleId::IncorrectResistorValueFormat),
    (&["subcircuit"], RuleId::IncorrectSubcircuitDefinition),
    (&["subckt"], RuleId::IncorrectSubcircuitDefinition),
    (&["capacit"], RuleId::MissingCapacitorValue),
    (&["transient"], RuleId::IncorrectTransientAnalysis),
    (&[".tran"], RuleId::IncorrectTransientAnalysis),
    (&[".tr "], RuleId::IncorrectTransientAnalysis),
    (&["voltage source"], RuleId::MissingVoltageValue),
    (&["voltage value"], RuleId::MissingVoltageValue),
    (&["print"], RuleId::IncorrectPrintStatement),
    (&["current source"], RuleId::IncorrectCurrentSourceDefinition),
    (&["param"], RuleId::IncorrectParameterDefinition),
    (&["option"], RuleId::IncorrectOptionsDefinition),
    (&["increment"], RuleId::MissingDcIncrement),
    (&[".dc"], RuleId::MissingDcIncrement),
];

fn classify(text: &str) -> Option<RuleId> {
    let lower = text.to_ascii_lowercase();
    // Longest first, in case one id is a substring of another.
    let mut ids: Vec<RuleId> = RuleId::ALL.to_vec();
    ids.sort_by_key(|r| std::cmp::Reverse(r.id().len()));
    if let Some(r) = ids.into_iter().find(|r| lower.contains(r.id())) {
        return Some(r);
    }
    CUES.iter()
        .find(|(words, _)| words.iter().all(|w| lower.contains(w)))
        .map(|(_, r)| *r)
}

/// One bug a model reported.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugClaim {
    pub line_no: usize,
    pub rule_id: String,
    pub description: String,
    pub suggestion: Option<String>,
    /// The response line this claim came from.
    pub source: String,
}

impl BugClaim {
    pub fn to_finding(&self) -> LintFinding {
        LintFinding {
            rule_id: self.rule_id.clone(),
            line_no: self.line_no,
            element_or_card: String::new(),
            snippet: String::new(),
            message: match &self.suggestion {
                Some(s) => format!("{}; fix: {}", self.description, s),
                None => self.description.clone(),
            },
            suggestion: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedBugs {
    pub claims: Vec<BugClaim>,
    /// Informative lines that yielded no claim.
    pub residue: Vec<String>,
    /// The model said the netlist has no bugs.
    pub declared_clean: bool,
}

impl ParsedBugs {
    pub fn findings(&self) -> Vec<LintFinding> {
        self.claims.iter().map(BugClaim::to_finding).collect()
    }
}

fn says_clean(lower: &str) -> bool {
    ["no bugs", "no syntax bugs", "no syntax errors", "no errors found", "no issues found"]
        .iter()
        .any(|p| lower.contains(p))
}

/// Scan a free-text bug report line by line. Lines naming a line number
/// become claims; everything else with content lands in `residue`.
pub fn parse_bug_response(text: &str) -> ParsedBugs {
    let mut out = ParsedBugs::default();
    let mut in_code = false;
    for raw in text.lines() {
        if raw.trim_start().starts_with("```") {
            in_code = !in_code;
            continue;
        }
        if !informative(raw) {
            continue;
        }
        // Corrected netlists are echoed in code blocks; keep them auditable.
        if in_code {
            out.residue.push(raw.to_string());
            continue;
        }
        let line = strip_markup(raw);
        let Some(m) = line_ref().captures(&line) else {
            if says_clean(&line.to_ascii_lowercase()) {
                out.declared_clean = true;
            } else {
                out.residue.push(raw.to_string());
            }
            continue;
        };
        let whole = m.get(0).unwrap();
        let Ok(line_no) = m[1].parse::<usize>() else {
            out.residue.push(raw.to_string());
            continue;
        };
        let before = line[..whole.start()].trim();
        let after = line[whole.end()..].trim_start_matches([':', ')', ' ', '-', ',']).trim();
        let (body, suggestion) = match fix_marker().find(after) {
            Some(f) if f.start() > 0 => (&after[..f.start()], Some(after[f.end()..].trim())),
            _ => (after, None),
        };
        let mut description = [before, body.trim()].iter().filter(|s| !s.is_empty()).copied().collect::<Vec<_>>().join(" ");
        let rule = classify(&description).or_else(|| suggestion.and_then(classify));
        if let Some(r) = rule {
            let stripped = description.replacen(r.id(), "", 1);
            let stripped = stripped.trim_matches([':', ' ', '[', ']', '-']).to_string();
            if !stripped.is_empty() {
                description = stripped;
            }
        }
        out.claims.push(BugClaim {
            line_no,
            rule_id: rule.map_or(UNCLASSIFIED, RuleId::id).to_string(),
            description: description.trim_end_matches(['.', ';', ',']).to_string(),
            suggestion: suggestion.filter(|s| !s.is_empty()).map(|s| s.trim_end_matches('.').to_string()),
            source: raw.to_string(),
        });
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedTrojan {
    /// `None` when the text never states a verdict.
    pub verdict: Option<bool>,
    pub components: BTreeSet<String>,
    pub nodes: BTreeSet<String>,
    /// Segments that were not understood, and names the netlist does not have.
    pub residue: Vec<String>,
}

impl ParsedTrojan {
    /// Partial report: verdict and suspect sets only. An unstated verdict is
    /// inferred from whether anything was named.
    pub fn to_report(&self) -> DetectionReport {
        DetectionReport {
            trojan_detected: self
                .verdict
                .unwrap_or(!self.nodes.is_empty() || !self.components.is_empty()),
            suspect_nodes: self.nodes.clone(),
            suspect_components: self.components.clone(),
            ..Default::default()
        }
    }
}

fn verdict_of(lower: &str) -> Option<bool> {
    const NO: [&str; 9] = [
        "no trojan",
        "trojan-free",
        "trojan free",
        "not trojan",
        "no hardware trojan",
        "trojan is not",
        "trojan was not",
        "does not contain a trojan",
        "without a trojan",
    ];
    const YES: [&str; 8] = [
        "trojan detected",
        "trojan found",
        "trojan is present",
        "trojan present",
        "contains a trojan",
        "trojan-inserted",
        "trojan inserted",
        "verdict: trojan",
    ];
    // The rule vocabulary mentions the word without stating a verdict.
    let lower = lower.replace("trojan-activation", "activation");
    if NO.iter().any(|p| lower.contains(p)) {
        Some(false)
    } else if YES.iter().any(|p| lower.contains(p)) {
        Some(true)
    } else {
        None
    }
}

#[derive(Clone, Copy)]
enum ListKind {
    Nodes,
    Components,
}

fn list_kind(label: &str) -> Option<ListKind> {
    let l = label.to_ascii_lowercase();
    if l.contains("node") {
        Some(ListKind::Nodes)
    } else if ["component", "device", "mosfet", "transistor", "element"].iter().any(|w| l.contains(w)) {
        Some(ListKind::Components)
    } else {
        None
    }
}

fn clean_name(tok: &str) -> &str {
    let t = tok.trim_matches(|c: char| "\"'`*.()[]{}".contains(c));
    let upper = t.to_ascii_uppercase();
    if (upper.starts_with("V(") || upper.starts_with("I(")) && t.ends_with(')') {
        return &t[2..t.len() - 1];
    }
    t
}

fn lookup<'a>(known: &'a BTreeSet<String>, name: &str) -> Option<&'a String> {
    known.get(name).or_else(|| known.iter().find(|k| k.eq_ignore_ascii_case(name)))
}

/// Scan a free-text answer for a verdict and for node and component lists.
/// Names are checked against the test netlist; unknown ones go to residue.
pub fn parse_trojan_response(
    text: &str,
    known_nodes: &BTreeSet<String>,
    known_components: &BTreeSet<String>,
) -> ParsedTrojan {
    let mut out = ParsedTrojan::default();
    for raw in text.split(['\n', ';']) {
        if !informative(raw) || raw.trim_start().starts_with("```") {
            continue;
        }
        let seg = strip_markup(raw);
        let lower = seg.to_ascii_lowercase();
        let mut used = false;
        if let Some(v) = verdict_of(&lower) {
            // A later explicit verdict line overrides prose.
            if out.verdict.is_none() || lower.starts_with("verdict") {
                out.verdict = Some(v);
            }
            used = true;
        }
        if let Some((label, items)) = seg.split_once(':') {
            if let Some(kind) = list_kind(label) {
                let known = match kind {
                    ListKind::Nodes => known_nodes,
                    ListKind::Components => known_components,
                };
                for tok in items.split(|c: char| c == ',' || c.is_whitespace()) {
                    let name = clean_name(tok);
                    if name.is_empty() || name.eq_ignore_ascii_case("and") || name.eq_ignore_ascii_case("none") {
                        continue;
                    }
                    match lookup(known, name) {
                        Some(k) => {
                            match kind {
                                ListKind::Nodes => out.nodes.insert(k.clone()),
                                ListKind::Components => out.components.insert(k.clone()),
                            };
                        }
                        None => out.residue.push(format!("unknown name `{name}` in: {}", raw.trim())),
                    }
                }
                used = true;
            }
        }
        if !used {
            out.residue.push(raw.trim().to_string());
        }
    }
    out
}
