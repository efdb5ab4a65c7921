use std::fmt::Write as _;

use amscheck::detect::{CombineMode, DetectConfig, DetectionReport};
use amscheck::lint::{PatternKind, Ruleset};
use amscheck::simlog::CircuitSpec;
use serde::{Deserialize, Serialize};

/// Context size the prompts are kept under, in estimated tokens.
pub const DEFAULT_TOKEN_BUDGET: usize = 16_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("prompt needs about {tokens} tokens, budget is {budget}")]
    BudgetExceeded { tokens: usize, budget: usize },
    #[error("examples include no {0} case")]
    MissingLabel(ExampleLabel),
}

/// Rough size of `text` in model tokens: one per four characters.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExampleLabel {
    Trojan,
    TrojanFree,
}

impl std::fmt::Display for ExampleLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExampleLabel::Trojan => "Trojan",
            ExampleLabel::TrojanFree => "Trojan-Free",
        })
    }
}

/// A labelled worked example shown before the test case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShot {
    pub label: ExampleLabel,
    pub netlist: String,
    pub log: String,
    pub explanation: String,
}

/// The netlist and log under test.
#[derive(Debug, Clone, PartialEq)]
pub struct TrojanQuery {
    pub netlist: String,
    pub log: String,
    pub spec: CircuitSpec,
    pub output_node: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system: String,
    pub examples: Vec<FewShot>,
    pub query: String,
}

impl PromptBundle {
    pub fn render(&self) -> String {
        let mut out = self.system.clone();
        if !self.examples.is_empty() {
            out.push_str("\n## Examples\n");
            for (i, ex) in self.examples.iter().enumerate() {
                let _ = write!(out, "\n### Example {} ({})\n\nNetlist:\n", i + 1, ex.label);
                push_block(&mut out, "spice", &ex.netlist);
                out.push_str("\nLog:\n");
                push_block(&mut out, "", &ex.log);
                let _ = writeln!(out, "\nExplanation: {}", ex.explanation.trim());
            }
        }
        out.push('\n');
        out.push_str(&self.query);
        out
    }
}

fn push_block(out: &mut String, lang: &str, body: &str) {
    let _ = writeln!(out, "```{lang}");
    for line in body.lines() {
        out.push_str(line);
        out.push('\n');
    }
    out.push_str("```\n");
}

fn numbered(text: &str) -> String {
    let lines: Vec<&str> = text.lines().collect();
    let width = lines.len().to_string().len();
    let mut out = String::new();
    for (i, l) in lines.iter().enumerate() {
        let _ = writeln!(out, "{:>width$} | {}", i + 1, l);
    }
    out
}

/// Prompt asking for a bug report on `netlist` under `rules`. Each rule is
/// one block, so refining a rule changes only that block.
pub fn build_lint_prompt(rules: &Ruleset, netlist: &str) -> String {
    let mut out = String::from(
        "You are reviewing a SPICE netlist for syntax bugs.\n\
         Check every line against the rules below and report only lines that break a rule.\n\
         \n## Syntax rules\n\n",
    );
    for (i, r) in rules.rules.iter().enumerate() {
        let _ = writeln!(out, "{}. [{}] ({:?})", i + 1, r.id, r.complexity);
        let _ = writeln!(out, "   {}", r.description);
        if !r.exceptions.is_empty() {
            out.push_str("   Exceptions:\n");
            for e in &r.exceptions {
                let _ = match e.kind {
                    PatternKind::Shape => writeln!(out, "   - do not flag lines whose tokens have the shape `{}`", e.pattern),
                    PatternKind::Literal => writeln!(out, "   - do not flag the line `{}`", e.pattern),
                };
            }
        }
        out.push('\n');
    }
    out.push_str("## Netlist\n\nLine numbers are shown on the left and are not part of the netlist.\n\n");
    push_block(&mut out, "spice", &numbered(netlist));
    out.push_str(
        "\n## Report\n\n\
         Work through the netlist one line at a time, then give:\n\
         1. A list of all syntax bugs in the netlist.\n\
         2. The location of each bug: its line number and the element or card name.\n\
         3. A suggested correction for each bug, and the corrected netlist.\n\
         \n\
         Write one bug per line in the form\n\
         Line <n>: <rule id>: <what is wrong>; fix: <corrected line>\n\
         If there are no bugs, answer \"No bugs found.\"\n",
    );
    out
}

fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn rules_section(cfg: &DetectConfig, spec: &CircuitSpec) -> String {
    let combine = match cfg.combine_mode {
        CombineMode::Union => "The Rule 2 nodes are the union of the nodes identified in steps (a) and (b).",
        CombineMode::Intersection => {
            "The Rule 2 nodes are the intersection of the nodes obtained in steps (a) and (b): keep only nodes found by both."
        }
    };
    format!(
        "You are analyzing an analog netlist and its DC sweep log for a hardware Trojan.\n\
         Apply the following supervised-learning rules in order.\n\
         \n## Rules\n\n\
         Rule 1 (activation inputs). The primary output must stay within [{lo}, {hi}] V. \
         Label every input sample whose output leaves this range a Trojan-Activation Input, \
         and every other sample a Normal Input.\n\
         \n\
         Rule 2 (node deviation). The deviation of node x at sample i is V_i(x) - V_(i-1)(x). Identify\n\
         (a) nodes whose largest deviation next to a Trojan-Activation Input is at least {rel} times \
         their largest deviation between Normal Inputs, and at least {floor} V;\n\
         (b) for each Trojan-Activation Input, the node with the highest absolute deviation among all intermediate nodes.\n\
         {combine}\n\
         \n\
         Rule 3 (current surge). Flag every MOSFET whose largest current under Trojan-Activation Inputs \
         is at least {crel} times its largest current under Normal Inputs, and at least {cfloor} A. \
         The drain, gate and source of each flagged MOSFET are suspect nodes.\n\
         \n\
         The Trojan-impacted nodes are the Rule 2 nodes together with the Rule 3 suspect nodes. \
         Flagged MOSFETs, and components whose terminals are all impacted, are Trojan components. \
         Supply rails, ground, the input and the primary output are never Trojan-impacted. \
         If there is no Trojan-Activation Input, the netlist is Trojan-free.\n",
        lo = num(spec.v_out_min),
        hi = num(spec.v_out_max),
        rel = num(cfg.dev_rel_threshold),
        floor = num(cfg.dev_abs_floor),
        crel = num(cfg.current_rel_threshold),
        cfloor = num(cfg.current_abs_floor),
    )
}

fn query_section(test: &TrojanQuery) -> String {
    let mut out = format!(
        "## Test netlist\n\nPrimary output: V({}), specification [{}, {}] V.\n\nNetlist:\n",
        test.output_node,
        num(test.spec.v_out_min),
        num(test.spec.v_out_max)
    );
    push_block(&mut out, "spice", &test.netlist);
    out.push_str("\nLog:\n");
    push_block(&mut out, "", &test.log);
    out.push_str(
        "\n## Answer\n\n\
         Reason step by step through Rules 1 to 3, then end with exactly these three lines:\n\
         Verdict: Trojan detected | No Trojan found\n\
         Trojan components: <comma-separated element names, or none>\n\
         Impacted nodes: <comma-separated node names, or none>\n",
    );
    out
}

pub fn trojan_bundle(cfg: &DetectConfig, examples: &[FewShot], test: &TrojanQuery) -> Result<PromptBundle, PromptError> {
    if !examples.is_empty() {
        for want in [ExampleLabel::Trojan, ExampleLabel::TrojanFree] {
            if !examples.iter().any(|e| e.label == want) {
                return Err(PromptError::MissingLabel(want));
            }
        }
    }
    Ok(PromptBundle {
        system: rules_section(cfg, &test.spec),
        examples: examples.to_vec(),
        query: query_section(test),
    })
}

/// Rules, then examples, then the test case. With no examples this is the
/// rules-only configuration.
pub fn build_trojan_prompt(
    cfg: &DetectConfig,
    examples: &[FewShot],
    test: &TrojanQuery,
    budget: usize,
) -> Result<String, PromptError> {
    let text = trojan_bundle(cfg, examples, test)?.render();
    let tokens = estimate_tokens(&text);
    if tokens > budget {
        return Err(PromptError::BudgetExceeded { tokens, budget });
    }
    Ok(text)
}

fn list(items: impl IntoIterator<Item = impl AsRef<str>>) -> String {
    let v: Vec<String> = items.into_iter().map(|s| s.as_ref().to_string()).collect();
    if v.is_empty() {
        "none".into()
    } else {
        v.join(", ")
    }
}

/// Example explanation written from a detection report's evidence.
pub fn explain(report: &DetectionReport) -> String {
    let ev = &report.evidence;
    if ev.activation_indices.is_empty() {
        return format!(
            "Every output sample of V({}) stays within the specification, so there are no \
             Trojan-Activation Inputs and the netlist is Trojan-free.",
            ev.output_node
        );
    }
    let ratios: Vec<String> = ev
        .rule3
        .devices
        .iter()
        .filter_map(|d| ev.rule3.ratios.get(d).and_then(|s| s.ratio).map(|r| format!("{d} {r:.1}x")))
        .collect();
    format!(
        "V({out}) leaves the specification at samples {idx}, which are the Trojan-Activation Inputs. \
         Rule 2(a) finds {a}. Rule 2(b) finds {b}. \
         Rule 3 flags {dev}{ratios}, making {r3} suspect. \
         Trojan-impacted nodes: {nodes}. Trojan components: {comps}.",
        out = ev.output_node,
        idx = list(ev.activation_indices.iter().map(|i| i.to_string())),
        a = list(&ev.rule2.set_a),
        b = list(&ev.rule2.set_b),
        dev = list(&ev.rule3.devices),
        ratios = if ratios.is_empty() { String::new() } else { format!(" (current ratio {})", ratios.join(", ")) },
        r3 = list(&ev.rule3.nodes),
        nodes = list(&report.suspect_nodes),
        comps = list(&report.suspect_components),
    )
}

/// The three answer lines a model is asked to end with.
pub fn render_report_summary(report: &DetectionReport) -> String {
    format!(
        "Verdict: {}\nTrojan components: {}\nImpacted nodes: {}\n",
        if report.trojan_detected { "Trojan detected" } else { "No Trojan found" },
        list(&report.suspect_components),
        list(&report.suspect_nodes),
    )
}

/// Keep comments, the header and at most `max_rows` evenly spaced data rows
/// (first and last included).
pub fn trim_log(text: &str, max_rows: usize) -> String {
    let lines: Vec<&str> = text.lines().collect();
    let split = lines
        .iter()
        .position(|l| !l.trim_start().starts_with('*'))
        .map_or(lines.len(), |p| p + 1);
    let (head, rows) = lines.split_at(split);
    let keep: Vec<&str> = if rows.len() <= max_rows {
        rows.to_vec()
    } else if max_rows == 0 {
        Vec::new()
    } else if max_rows == 1 {
        vec![rows[0]]
    } else {
        (0..max_rows)
            .map(|k| rows[k * (rows.len() - 1) / (max_rows - 1)])
            .collect()
    };
    let mut out = String::new();
    for l in head.iter().chain(keep.iter()) {
        out.push_str(l);
        out.push('\n');
    }
    out
}
