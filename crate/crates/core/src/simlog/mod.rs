//! Tabular DC-sweep logs: parsing, writing and synthetic generation.
//!
//! Format: optional `*` comment lines (`* output <node>` names the primary
//! output), one header line `vin v(<node>)... i(<device>)...`, then one
//! whitespace-separated row per sweep sample.

mod generate;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use generate::{gen_log, BehaviorModel, Sweep};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationLog {
    pub inputs: Vec<f64>,
    pub node_voltages: BTreeMap<String, Vec<f64>>,
    pub device_currents: BTreeMap<String, Vec<f64>>,
    pub output_node: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub v_out_min: f64,
    pub v_out_max: f64,
}

impl CircuitSpec {
    pub fn new(v_out_min: f64, v_out_max: f64) -> Result<Self, SimlogError> {
        if v_out_min < v_out_max {
            Ok(CircuitSpec { v_out_min, v_out_max })
        } else {
            Err(SimlogError::InvalidSpec { v_out_min, v_out_max })
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.v_out_min..=self.v_out_max).contains(&v)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimlogError {
    #[error("header: {0}")]
    HeaderMismatch(String),
    #[error("row {row}: expected {expected} columns, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("row {row}: input does not increase")]
    NonMonotoneSweep { row: usize },
    #[error("row {row}, column {col}: `{text}` is not a finite number")]
    InvalidNumber { row: usize, col: usize, text: String },
    #[error("a log needs at least 2 samples, found {0}")]
    TooFewSamples(usize),
    #[error("sweep produces fewer than 2 samples")]
    EmptySweep,
    #[error("node `{0}` is not in the netlist")]
    UnknownNode(String),
    #[error("output node `{0}` has no column")]
    MissingOutput(String),
    #[error("spec lower bound {v_out_min} is not below upper bound {v_out_max}")]
    InvalidSpec { v_out_min: f64, v_out_max: f64 },
}

impl SimulationLog {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn output(&self) -> &[f64] {
        &self.node_voltages[&self.output_node]
    }

    pub fn validate(&self) -> Result<(), SimlogError> {
        let n = self.inputs.len();
        if n < 2 {
            return Err(SimlogError::TooFewSamples(n));
        }
        if !self.node_voltages.contains_key(&self.output_node) {
            return Err(SimlogError::MissingOutput(self.output_node.clone()));
        }
        for (row, w) in self.inputs.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(SimlogError::NonMonotoneSweep { row: row + 1 });
            }
        }
        let columns = self.node_voltages.values().chain(self.device_currents.values());
        for (col, series) in columns.enumerate() {
            if series.len() != n {
                return Err(SimlogError::RaggedRow {
                    row: series.len().min(n),
                    expected: n,
                    found: series.len(),
                });
            }
            if let Some(row) = series.iter().position(|v| !v.is_finite()) {
                return Err(SimlogError::InvalidNumber {
                    row,
                    col: col + 1,
                    text: series[row].to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Column header parsing: `v(x)` and `i(x)`, case-insensitive.
fn probe(col: &str) -> Option<(char, &str)> {
    let open = col.find('(')?;
    let kind = col[..open].to_ascii_lowercase();
    let inner = col[open + 1..].strip_suffix(')')?.trim();
    if inner.is_empty() {
        return None;
    }
    match kind.as_str() {
        "v" => Some(('v', inner)),
        "i" => Some(('i', inner)),
        _ => None,
    }
}

fn guess_output(nodes: &BTreeMap<String, Vec<f64>>) -> Option<String> {
    for want in ["out", "vout"] {
        if let Some(k) = nodes.keys().find(|k| k.eq_ignore_ascii_case(want)) {
            return Some(k.clone());
        }
    }
    nodes.keys().next().cloned()
}

pub fn parse_log(text: &str) -> Result<SimulationLog, SimlogError> {
    let mut output = None;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();
    while let Some((_, l)) = lines.peek() {
        let Some(comment) = l.trim_start().strip_prefix('*') else { break };
        let mut words = comment.split_whitespace();
        if words.next().is_some_and(|w| w.eq_ignore_ascii_case("output")) {
            output = words.next().map(str::to_string);
        }
        lines.next();
    }
    let (_, header) = lines.next().ok_or_else(|| SimlogError::HeaderMismatch("missing header".into()))?;
    let cols: Vec<&str> = header.split_whitespace().collect();
    if !cols.first().is_some_and(|c| c.eq_ignore_ascii_case("vin")) {
        return Err(SimlogError::HeaderMismatch("first column must be `vin`".into()));
    }
    let mut keys = Vec::with_capacity(cols.len() - 1);
    for c in &cols[1..] {
        let (kind, name) = probe(c).ok_or_else(|| SimlogError::HeaderMismatch(format!("unrecognized column `{c}`")))?;
        if keys.iter().any(|(k, n)| *k == kind && n == name) {
            return Err(SimlogError::HeaderMismatch(format!("duplicate column `{c}`")));
        }
        keys.push((kind, name.to_string()));
    }

    let mut inputs = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); keys.len()];
    for (row, (_, line)) in lines.enumerate() {
        let cells: Vec<&str> = line.split_whitespace().collect();
        if cells.len() != cols.len() {
            return Err(SimlogError::RaggedRow {
                row,
                expected: cols.len(),
                found: cells.len(),
            });
        }
        let mut values = Vec::with_capacity(cells.len());
        for (col, cell) in cells.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| SimlogError::InvalidNumber {
                    row,
                    col,
                    text: cell.to_string(),
                })?;
            values.push(v);
        }
        if let Some(prev) = inputs.last() {
            if !(values[0] > *prev) {
                return Err(SimlogError::NonMonotoneSweep { row });
            }
        }
        inputs.push(values[0]);
        for (c, v) in columns.iter_mut().zip(&values[1..]) {
            c.push(*v);
        }
    }
    if inputs.len() < 2 {
        return Err(SimlogError::TooFewSamples(inputs.len()));
    }
    let mut node_voltages = BTreeMap::new();
    let mut device_currents = BTreeMap::new();
    for ((kind, name), series) in keys.into_iter().zip(columns) {
        match kind {
            'v' => node_voltages.insert(name, series),
            _ => device_currents.insert(name, series),
        };
    }
    let output_node = match output {
        Some(o) => o,
        None => guess_output(&node_voltages).ok_or_else(|| SimlogError::HeaderMismatch("no voltage columns".into()))?,
    };
    let log = SimulationLog {
        inputs,
        node_voltages,
        device_currents,
        output_node,
    };
    log.validate()?;
    Ok(log)
}

/// `1.23457e+00`: six significant digits, signed two-digit exponent.
pub(crate) fn sci6(x: f64) -> String {
    let s = format!("{x:.5e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

pub fn write_log(log: &SimulationLog) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "* output {}", log.output_node);
    let mut header = vec!["vin".to_string()];
    header.extend(log.node_voltages.keys().map(|k| format!("v({k})")));
    header.extend(log.device_currents.keys().map(|k| format!("i({k})")));
    out.push_str(&header.join(" "));
    out.push('\n');
    for (i, x) in log.inputs.iter().enumerate() {
        let mut row = vec![sci6(*x)];
        row.extend(log.node_voltages.values().map(|s| sci6(s[i])));
        row.extend(log.device_currents.values().map(|s| sci6(s[i])));
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests;
