//! Syntax lint over parsed netlists: findings, fixes and ruleset refinement.

mod fix;
mod refine;
mod rules;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::netlist::{parse_netlist, Netlist};
pub use fix::{apply_fixes, FixConflict, FixError, FixOutcome};
pub use refine::{refine_ruleset, token_shape, Verdict};
pub use rules::RuleId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Complexity {
    Easy,
    Medium,
    Difficult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    /// Token-kind sequence, names and values wildcarded.
    Shape,
    /// Exact folded statement text.
    Literal,
}

/// A line pattern a rule must not flag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExceptionPattern {
    pub kind: PatternKind,
    pub pattern: String,
}

impl ExceptionPattern {
    pub fn matches(&self, snippet: &str) -> bool {
        match self.kind {
            PatternKind::Shape => token_shape(snippet) == self.pattern,
            PatternKind::Literal => refine::normalize(snippet) == self.pattern,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintRule {
    pub id: String,
    pub complexity: Complexity,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub exceptions: BTreeSet<ExceptionPattern>,
}

impl LintRule {
    fn from_rule(r: RuleId) -> Self {
        LintRule {
            id: r.id().to_string(),
            complexity: r.complexity(),
            description: r.description().to_string(),
            exceptions: BTreeSet::new(),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LintError {
    #[error("unknown rule id `{0}`")]
    UnknownRule(String),
    #[error("rule `{0}` listed more than once")]
    DuplicateRule(String),
    #[error("rule `{id}` has complexity {found:?}, expected {expected:?}")]
    ComplexityMismatch {
        id: String,
        found: Complexity,
        expected: Complexity,
    },
    #[error("ruleset is empty")]
    EmptyRuleset,
    #[error("ruleset config: {0}")]
    Config(String),
}

/// Active rules, in table order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ruleset {
    #[serde(rename = "rule", default)]
    pub rules: Vec<LintRule>,
}

impl Default for Ruleset {
    fn default() -> Self {
        Ruleset {
            rules: RuleId::ALL.into_iter().map(LintRule::from_rule).collect(),
        }
    }
}

impl Ruleset {
    pub fn get(&self, id: &str) -> Option<&LintRule> {
        self.rules.iter().find(|r| r.id == id)
    }

    /// Only the listed rules, with default descriptions.
    pub fn only(ids: &[&str]) -> Result<Self, LintError> {
        let set = Ruleset {
            rules: ids
                .iter()
                .map(|id| {
                    RuleId::from_id(id)
                        .map(LintRule::from_rule)
                        .ok_or_else(|| LintError::UnknownRule(id.to_string()))
                })
                .collect::<Result<_, _>>()?,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), LintError> {
        if self.rules.is_empty() {
            return Err(LintError::EmptyRuleset);
        }
        let mut seen = BTreeSet::new();
        for r in &self.rules {
            let known = RuleId::from_id(&r.id).ok_or_else(|| LintError::UnknownRule(r.id.clone()))?;
            if known.complexity() != r.complexity {
                return Err(LintError::ComplexityMismatch {
                    id: r.id.clone(),
                    found: r.complexity,
                    expected: known.complexity(),
                });
            }
            if !seen.insert(r.id.as_str()) {
                return Err(LintError::DuplicateRule(r.id.clone()));
            }
        }
        Ok(())
    }

    fn fill_descriptions(mut self) -> Self {
        for r in &mut self.rules {
            if r.description.is_empty() {
                if let Some(known) = RuleId::from_id(&r.id) {
                    r.description = known.description().to_string();
                }
            }
        }
        self
    }

    pub fn from_toml(text: &str) -> Result<Self, LintError> {
        let set: Ruleset = toml::from_str(text).map_err(|e| LintError::Config(e.to_string()))?;
        set.validate()?;
        Ok(set.fill_descriptions())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("ruleset always serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LintError> {
        let set: Ruleset = serde_json::from_str(text).map_err(|e| LintError::Config(e.to_string()))?;
        set.validate()?;
        Ok(set.fill_descriptions())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ruleset always serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixAction {
    InsertToken,
    ReplaceToken,
    DeleteToken,
    AppendLine,
    RenameIdentifier,
}

/// A concrete edit. `tokens` is a half-open range of statement token
/// indices (index 0 is the element name or directive); an insertion uses an
/// empty range at the insertion point. `after_line` is the physical line
/// (1-based, 0 = before the first) an appended line goes after.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixSuggestion {
    pub action: FixAction,
    pub payload: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub after_line: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintFinding {
    pub rule_id: String,
    #[serde(rename = "line")]
    pub line_no: usize,
    pub element_or_card: String,
    pub snippet: String,
    pub message: String,
    pub suggestion: Option<FixSuggestion>,
}

impl LintFinding {
    pub fn complexity(&self) -> Option<Complexity> {
        RuleId::from_id(&self.rule_id).map(RuleId::complexity)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub easy: usize,
    pub medium: usize,
    pub difficult: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugReport {
    pub findings: Vec<LintFinding>,
    #[serde(default)]
    pub summary: Summary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrected_text: Option<String>,
}

impl BugReport {
    pub fn new(findings: Vec<LintFinding>) -> Self {
        let mut summary = Summary::default();
        for f in &findings {
            match f.complexity() {
                Some(Complexity::Easy) => summary.easy += 1,
                Some(Complexity::Medium) => summary.medium += 1,
                Some(Complexity::Difficult) => summary.difficult += 1,
                None => {}
            }
            summary.total += 1;
        }
        BugReport {
            findings,
            summary,
            corrected_text: None,
        }
    }

    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn rule_ids(&self) -> BTreeSet<&str> {
        self.findings.iter().map(|f| f.rule_id.as_str()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report always serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Run every active rule. Findings are ordered by line, then rule table order.
pub fn lint(n: &Netlist, rules: &Ruleset) -> Result<BugReport, LintError> {
    rules.validate()?;
    let ctx = rules::Ctx::new(n);
    let mut findings: Vec<(usize, usize, LintFinding)> = Vec::new();
    for rule in &rules.rules {
        let id = RuleId::from_id(&rule.id).expect("validated");
        let order = RuleId::ALL.iter().position(|r| *r == id).unwrap_or(0);
        for f in id.check(&ctx) {
            if rule.exceptions.iter().any(|e| e.matches(&f.snippet)) {
                continue;
            }
            findings.push((f.line_no, order, f));
        }
    }
    findings.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    findings.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    Ok(BugReport::new(findings.into_iter().map(|(_, _, f)| f).collect()))
}

pub fn lint_text(text: &str, rules: &Ruleset) -> Result<BugReport, LintError> {
    lint(&parse_netlist(text).0, rules)
}

/// Lint, apply every suggestion, and attach the corrected text when it no
/// longer triggers any of the original findings' rules.
pub fn lint_and_fix(text: &str, rules: &Ruleset) -> Result<(BugReport, FixOutcome), LintError> {
    let mut report = lint_text(text, rules)?;
    let outcome = apply_fixes(text, &report.findings);
    if !report.is_clean() {
        let after = lint_text(&outcome.text, rules)?;
        let before = report.rule_ids();
        if !after.findings.iter().any(|f| before.contains(f.rule_id.as_str())) {
            report.corrected_text = Some(outcome.text.clone());
        }
    }
    Ok((report, outcome))
}
