//! Ruleset refinement from reviewer feedback.

use super::{ExceptionPattern, LintFinding, PatternKind, Ruleset};
use crate::netlist::lexer::tokenize;
use crate::netlist::{is_valid_identifier, PhysicalValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Verdict {
    TruePositive,
    FalsePositive,
}

pub(crate) fn normalize(snippet: &str) -> String {
    tokenize(snippet).join(" ")
}

fn token_kind(tok: &str) -> String {
    if let Some(open) = tok.find('(') {
        return format!("fn:{}", tok[..open].to_ascii_uppercase());
    }
    if let Some((key, _)) = tok.split_once('=') {
        return format!("key:{}=", key.to_ascii_lowercase());
    }
    if !tok.is_empty() && tok.bytes().all(|b| b.is_ascii_digit()) {
        return "int".into();
    }
    if let Some(v) = PhysicalValue::parse(tok) {
        return match v.suffix {
            Some(_) => format!("num:{}", v.suffix_text()),
            None => "num".into(),
        };
    }
    if is_valid_identifier(tok) {
        return "ident".into();
    }
    "other".into()
}

/// Token-kind sequence of a statement. The leading token keeps its element
/// letter or directive; later tokens are reduced to their lexical class, with
/// scale suffixes kept as written.
pub fn token_shape(snippet: &str) -> String {
    let toks = tokenize(snippet);
    let Some(first) = toks.first() else { return String::new() };
    let head = if first.starts_with('.') {
        first.to_ascii_uppercase()
    } else {
        first.chars().next().map(|c| c.to_ascii_uppercase().to_string()).unwrap_or_default()
    };
    std::iter::once(head)
        .chain(toks[1..].iter().map(|t| token_kind(t)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Add an exception for every false positive. The shape pattern is used
/// unless it would also hide a true positive of the same rule in the
/// feedback, in which case the exact statement is excepted instead.
pub fn refine_ruleset(rules: &Ruleset, feedback: &[(LintFinding, Verdict)]) -> Ruleset {
    let mut out = rules.clone();
    for (fp, _) in feedback.iter().filter(|(_, v)| *v == Verdict::FalsePositive) {
        let Some(rule) = out.rules.iter_mut().find(|r| r.id == fp.rule_id) else { continue };
        let tps: Vec<&LintFinding> = feedback
            .iter()
            .filter(|(f, v)| *v == Verdict::TruePositive && f.rule_id == fp.rule_id)
            .map(|(f, _)| f)
            .collect();
        let shape = ExceptionPattern {
            kind: PatternKind::Shape,
            pattern: token_shape(&fp.snippet),
        };
        let literal = ExceptionPattern {
            kind: PatternKind::Literal,
            pattern: normalize(&fp.snippet),
        };
        let chosen = if !tps.iter().any(|t| shape.matches(&t.snippet)) {
            shape
        } else if !tps.iter().any(|t| literal.matches(&t.snippet)) {
            literal
        } else {
            // Same text judged both ways; keep the true positive.
            continue;
        };
        rule.exceptions.insert(chosen);
    }
    out
}
