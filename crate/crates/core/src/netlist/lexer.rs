//! Physical-line handling shared by the parser and the fixer.
//!
//! A netlist is split into physical lines, continuation lines (`+`) are
//! folded onto the statement they extend, and every statement keeps the
//! byte spans of its tokens so edits can be applied to the original text.

/// A token with its location in the original text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    /// Zero-based physical line index.
    pub line_idx: usize,
    /// Byte range within the physical line (without the line terminator).
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineKind {
    Title,
    Blank,
    Comment,
    Statement,
}

/// One logical line: a physical line plus any continuation lines folded onto it.
#[derive(Debug, Clone)]
pub struct LogicalLine {
    /// One-based number of the first physical line.
    pub line_no: usize,
    pub kind: LineKind,
    /// Physical line indices covered, first line included.
    pub physical: Vec<usize>,
    pub tokens: Vec<Token>,
}

impl LogicalLine {
    /// Folded statement text, tokens joined by single spaces.
    pub fn folded_text(&self) -> String {
        self.tokens
            .iter()
            .map(|t| t.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Split text into physical lines, dropping `\n` / `\r\n` terminators.
pub fn physical_lines(text: &str) -> Vec<&str> {
    text.lines().collect()
}

/// Fold physical lines into logical lines. The first line is always the title.
pub fn fold(lines: &[&str]) -> (Vec<LogicalLine>, Vec<usize>) {
    let mut out: Vec<LogicalLine> = Vec::new();
    let mut orphans = Vec::new();
    let mut last_stmt: Option<usize> = None;
    for (idx, raw) in lines.iter().enumerate() {
        if idx == 0 {
            out.push(LogicalLine {
                line_no: 1,
                kind: LineKind::Title,
                physical: vec![0],
                tokens: Vec::new(),
            });
            continue;
        }
        let trimmed = raw.trim_start();
        if let Some(rest) = trimmed.strip_prefix('+') {
            let offset = raw.len() - rest.len();
            match last_stmt {
                Some(pos) => {
                    let stmt = &mut out[pos];
                    stmt.physical.push(idx);
                    stmt.tokens.extend(tokenize_at(rest, idx, offset));
                }
                None => orphans.push(idx + 1),
            }
            if last_stmt.is_some() {
                continue;
            }
        }
        let kind = if trimmed.is_empty() {
            LineKind::Blank
        } else if trimmed.starts_with('*') || trimmed.starts_with('+') {
            LineKind::Comment
        } else {
            LineKind::Statement
        };
        let tokens = if kind == LineKind::Statement {
            tokenize_at(raw, idx, 0)
        } else {
            Vec::new()
        };
        // A line holding only an inline `$` comment.
        let kind = if kind == LineKind::Statement && tokens.is_empty() {
            LineKind::Comment
        } else {
            kind
        };
        if kind == LineKind::Statement {
            last_stmt = Some(out.len());
        }
        out.push(LogicalLine {
            line_no: idx + 1,
            kind,
            physical: vec![idx],
            tokens,
        });
    }
    (out, orphans)
}

/// Tokenize one statement's text (no location bookkeeping needed by the caller).
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_at(text, 0, 0).into_iter().map(|t| t.text).collect()
}

/// Whitespace tokenizer that keeps parenthesised groups together, joins
/// `key = value` spellings into one token and stops at an inline `$` comment.
pub(crate) fn tokenize_at(text: &str, line_idx: usize, offset: usize) -> Vec<Token> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if bytes[i] == b'$' {
            break;
        }
        let start = i;
        let mut depth = 0usize;
        while i < bytes.len() {
            let c = bytes[i];
            if c == b'(' {
                depth += 1;
            } else if c == b')' {
                depth = depth.saturating_sub(1);
            } else if depth == 0 && c == b'$' {
                break;
            } else if depth == 0 && c.is_ascii_whitespace() {
                let j = skip_ws(bytes, i);
                if j >= bytes.len() || bytes[j] == b'$' {
                    break;
                }
                let cur = &text[start..i];
                if !cur.contains('=') && bytes[j] == b'=' {
                    i = j;
                    continue;
                }
                if cur.ends_with('=') && !text[j..scan_word(bytes, j)].contains('=') {
                    i = j;
                    continue;
                }
                break;
            }
            i += 1;
        }
        let piece = &text[start..i];
        let word: String = if piece.contains('(') {
            piece.split_whitespace().collect::<Vec<_>>().join(" ")
        } else {
            piece.split_whitespace().collect()
        };
        out.push(Token {
            text: word,
            line_idx,
            start: offset + start,
            end: offset + i,
        });
    }
    out
}

fn skip_ws(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && bytes[i].is_ascii_whitespace() {
        i += 1;
    }
    i
}

fn scan_word(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
        i += 1;
    }
    i
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_whitespace() {
        assert_eq!(tokenize("M1 2 3 0 0  NMOS"), ["M1", "2", "3", "0", "0", "NMOS"]);
    }

    #[test]
    fn keeps_groups_and_assignments() {
        assert_eq!(
            tokenize("V1 in 0 PULSE(0 1.8 0 1n) W = 1u L= 2u K =3"),
            ["V1", "in", "0", "PULSE(0 1.8 0 1n)", "W=1u", "L=2u", "K=3"]
        );
        assert_eq!(tokenize(".PARAM R1="), [".PARAM", "R1="]);
        assert_eq!(tokenize(".PARAM a= b=2"), [".PARAM", "a=", "b=2"]);
    }

    #[test]
    fn inline_comment_ends_tokens() {
        assert_eq!(tokenize("R1 a b 1k $ load"), ["R1", "a", "b", "1k"]);
    }

    #[test]
    fn folds_continuations() {
        let text = "title\nM1 d g\n+ s b NMOS\n* note\nR1 a b 1k";
        let lines = physical_lines(text);
        let (logical, orphans) = fold(&lines);
        assert!(orphans.is_empty());
        assert_eq!(logical.len(), 4);
        assert_eq!(logical[1].folded_text(), "M1 d g s b NMOS");
        assert_eq!(logical[1].physical, vec![1, 2]);
        assert_eq!(logical[1].tokens[3].line_idx, 2);
        assert_eq!(logical[2].kind, LineKind::Comment);
    }

    #[test]
    fn orphan_continuation_is_reported() {
        let lines = physical_lines("t\n+ x y");
        let (logical, orphans) = fold(&lines);
        assert_eq!(orphans, vec![2]);
        assert_eq!(logical[1].kind, LineKind::Comment);
    }
}
