//! Apply fix suggestions to raw netlist text.
//!
//! All edits are resolved against the original token spans, so applying
//! them together gives the same text as applying them one by one in line
//! order while tracking offsets. Untouched bytes, including line endings,
//! are preserved.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{FixAction, LintFinding};
use crate::netlist::lexer::{fold, LineKind, LogicalLine, Token};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixConflict {
    /// Indices into the findings slice.
    pub first: usize,
    pub second: usize,
    pub line_no: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FixError {
    #[error("{} pair(s) of fixes edit the same token span", .0.len())]
    ConflictingFixes(Vec<FixConflict>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixOutcome {
    pub text: String,
    /// Findings whose edits were applied.
    pub applied: Vec<usize>,
    /// Findings without a usable suggestion.
    pub skipped: Vec<usize>,
    pub conflicts: Vec<FixConflict>,
    /// New 1-based line number of each original physical line.
    pub line_map: Vec<usize>,
}

impl FixOutcome {
    pub fn check(&self) -> Result<&str, FixError> {
        if self.conflicts.is_empty() {
            Ok(&self.text)
        } else {
            Err(FixError::ConflictingFixes(self.conflicts.clone()))
        }
    }
}

#[derive(Debug, Clone)]
struct Span {
    line_idx: usize,
    start: usize,
    end: usize,
    replacement: String,
}

#[derive(Debug, Default)]
struct Edits {
    spans: Vec<Span>,
    /// (after physical line, text)
    lines: Vec<(usize, String)>,
}

fn overlaps(a: &Span, b: &Span) -> bool {
    if a.line_idx != b.line_idx {
        return false;
    }
    if a.start == a.end || b.start == b.end {
        let (p, q) = if a.start == a.end { (a, b) } else { (b, a) };
        return q.start <= p.start && p.start <= q.end;
    }
    a.start < b.end && b.start < a.end
}

/// Span covering a token plus the whitespace that separates it from the
/// previous token on the same physical line.
fn deletion(tokens: &[Token], i: usize) -> Span {
    let t = &tokens[i];
    let start = match i.checked_sub(1).map(|p| &tokens[p]) {
        Some(prev) if prev.line_idx == t.line_idx => prev.end,
        _ => t.start,
    };
    Span {
        line_idx: t.line_idx,
        start,
        end: t.end,
        replacement: String::new(),
    }
}

fn edits_for(f: &LintFinding, stmt: Option<&LogicalLine>, all: &[LogicalLine]) -> Option<Edits> {
    let s = f.suggestion.as_ref()?;
    let mut edits = Edits::default();
    if s.action == FixAction::AppendLine {
        edits.lines.push((s.after_line?, s.payload.clone()));
        return Some(edits);
    }
    let stmt = stmt?;
    let toks = &stmt.tokens;
    let (a, b) = s.tokens?;
    match s.action {
        FixAction::InsertToken => {
            if a > toks.len() {
                return None;
            }
            edits.spans.push(match a.checked_sub(1) {
                Some(prev) => Span {
                    line_idx: toks[prev].line_idx,
                    start: toks[prev].end,
                    end: toks[prev].end,
                    replacement: format!(" {}", s.payload),
                },
                None => Span {
                    line_idx: toks.first()?.line_idx,
                    start: toks[0].start,
                    end: toks[0].start,
                    replacement: format!("{} ", s.payload),
                },
            });
        }
        FixAction::ReplaceToken => {
            if a >= b || b > toks.len() {
                return None;
            }
            edits.spans.push(Span {
                line_idx: toks[a].line_idx,
                start: toks[a].start,
                end: toks[a].end,
                replacement: s.payload.clone(),
            });
            edits.spans.extend((a + 1..b).map(|i| deletion(toks, i)));
        }
        FixAction::DeleteToken => {
            if a >= b || b > toks.len() {
                return None;
            }
            edits.spans.extend((a..b).map(|i| deletion(toks, i)));
        }
        FixAction::RenameIdentifier => {
            let old = &toks.get(a)?.text;
            for line in all.iter().filter(|l| l.kind == LineKind::Statement) {
                for t in line.tokens.iter().skip(1) {
                    if t.text.eq_ignore_ascii_case(old) {
                        edits.spans.push(Span {
                            line_idx: t.line_idx,
                            start: t.start,
                            end: t.end,
                            replacement: s.payload.clone(),
                        });
                    }
                }
            }
        }
        FixAction::AppendLine => unreachable!(),
    }
    Some(edits)
}

fn split_terminated(text: &str) -> Vec<(&str, &str)> {
    text.split_inclusive('\n')
        .map(|l| {
            if let Some(c) = l.strip_suffix("\r\n") {
                (c, "\r\n")
            } else if let Some(c) = l.strip_suffix('\n') {
                (c, "\n")
            } else {
                (l, "")
            }
        })
        .collect()
}

/// Apply every finding's suggestion. Findings whose edits overlap another
/// finding's are reported as conflicts and neither is applied.
pub fn apply_fixes(text: &str, findings: &[LintFinding]) -> FixOutcome {
    let lines = split_terminated(text);
    let contents: Vec<&str> = lines.iter().map(|l| l.0).collect();
    let (logical, _) = fold(&contents);
    let by_line: BTreeMap<usize, &LogicalLine> = logical.iter().map(|l| (l.line_no, l)).collect();

    let mut planned: Vec<Option<Edits>> = findings
        .iter()
        .map(|f| edits_for(f, by_line.get(&f.line_no).copied(), &logical))
        .collect();
    let skipped: Vec<usize> = (0..findings.len()).filter(|&i| planned[i].is_none()).collect();

    let mut conflicts = Vec::new();
    for i in 0..planned.len() {
        for j in i + 1..planned.len() {
            let (Some(a), Some(b)) = (&planned[i], &planned[j]) else { continue };
            if a.spans.iter().any(|x| b.spans.iter().any(|y| overlaps(x, y))) {
                conflicts.push(FixConflict {
                    first: i,
                    second: j,
                    line_no: findings[i].line_no,
                });
            }
        }
    }
    for c in &conflicts {
        planned[c.first] = None;
        planned[c.second] = None;
    }
    let applied: Vec<usize> = (0..planned.len()).filter(|&i| planned[i].is_some()).collect();
    if applied.is_empty() {
        return FixOutcome {
            text: text.to_string(),
            applied,
            skipped,
            conflicts,
            line_map: (1..=lines.len()).collect(),
        };
    }

    let mut per_line: BTreeMap<usize, Vec<Span>> = BTreeMap::new();
    let mut inserted: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for e in planned.into_iter().flatten() {
        for s in e.spans {
            per_line.entry(s.line_idx).or_default().push(s);
        }
        for (after, payload) in e.lines {
            inserted.entry(after.min(lines.len())).or_default().push(payload);
        }
    }

    let eol = if text.contains("\r\n") { "\r\n" } else { "\n" };
    let mut out = String::with_capacity(text.len() + 64);
    let mut line_map = Vec::with_capacity(lines.len());
    let mut new_line = 1;
    let emit_inserted = |after: usize, out: &mut String, new_line: &mut usize| {
        for payload in inserted.get(&after).into_iter().flatten() {
            out.push_str(payload);
            out.push_str(eol);
            *new_line += 1;
        }
    };
    emit_inserted(0, &mut out, &mut new_line);
    for (idx, (content, term)) in lines.iter().enumerate() {
        let mut content = content.to_string();
        if let Some(spans) = per_line.get_mut(&idx) {
            spans.sort_by(|a, b| (b.start, b.end).cmp(&(a.start, a.end)));
            spans.dedup_by(|a, b| a.start == b.start && a.end == b.end && a.replacement == b.replacement);
            for s in spans.iter() {
                content.replace_range(s.start..s.end, &s.replacement);
            }
        }
        out.push_str(&content);
        let needs_break = term.is_empty() && inserted.contains_key(&(idx + 1));
        out.push_str(if needs_break { eol } else { term });
        line_map.push(new_line);
        new_line += 1;
        emit_inserted(idx + 1, &mut out, &mut new_line);
    }
    FixOutcome {
        text: out,
        applied,
        skipped,
        conflicts,
        line_map,
    }
}
