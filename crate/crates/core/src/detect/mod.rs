//! Trojan localization from a sweep log.
//!
//! Out-of-spec outputs mark the activation inputs. Nodes are flagged when
//! their sample-to-sample deviation jumps near activation inputs relative to
//! the normal range (set A) or when they deviate the most at an activation
//! input (set B). MOSFETs whose current surges under activation add their
//! drain, gate and source.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::netlist::{is_ground, ElementKind, Netlist};
use crate::simlog::{CircuitSpec, SimulationLog};

/// Relative slack on threshold comparisons, so a ratio that is exactly the
/// threshold in decimal is not lost to binary rounding.
const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CombineMode {
    #[default]
    Union,
    Intersection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    pub combine_mode: CombineMode,
    pub dev_rel_threshold: f64,
    pub dev_abs_floor: f64,
    pub current_rel_threshold: f64,
    pub current_abs_floor: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            combine_mode: CombineMode::Union,
            dev_rel_threshold: 3.0,
            dev_abs_floor: 0.05,
            current_rel_threshold: 5.0,
            current_abs_floor: 1e-6,
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<(), DetectError> {
        let all = [
            self.dev_rel_threshold,
            self.dev_abs_floor,
            self.current_rel_threshold,
            self.current_abs_floor,
        ];
        if all.iter().all(|t| *t > 0.0 && t.is_finite()) {
            Ok(())
        } else {
            Err(DetectError::InvalidThreshold)
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DetectError {
    #[error("node `{0}` has no column in the log")]
    UnknownNode(String),
    #[error("thresholds must be positive and finite")]
    InvalidThreshold,
    #[error("log: {0}")]
    Log(#[from] crate::simlog::SimlogError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputPartition {
    pub activation: BTreeSet<usize>,
    pub normal: BTreeSet<usize>,
}

pub fn classify_inputs(log: &SimulationLog, spec: &CircuitSpec) -> InputPartition {
    classify_output(log.output(), spec)
}

fn classify_output(out: &[f64], spec: &CircuitSpec) -> InputPartition {
    let mut p = InputPartition::default();
    for (i, v) in out.iter().enumerate() {
        if spec.contains(*v) {
            p.normal.insert(i);
        } else {
            p.activation.insert(i);
        }
    }
    p
}

/// First differences: element `j` is `V[j+1] - V[j]`.
pub fn deviation_series(log: &SimulationLog, node: &str) -> Result<Vec<f64>, DetectError> {
    let v = log
        .node_voltages
        .get(node)
        .ok_or_else(|| DetectError::UnknownNode(node.to_string()))?;
    Ok(differences(v))
}

fn differences(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[1] - w[0]).collect()
}

fn reaches(value: f64, threshold: f64) -> bool {
    value >= threshold * (1.0 - SLACK)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationStats {
    pub activation_max: f64,
    pub normal_max: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Rule2Result {
    pub set_a: BTreeSet<String>,
    pub set_b: BTreeSet<String>,
    pub combined: BTreeSet<String>,
    pub mode: CombineMode,
    pub stats: BTreeMap<String, DeviationStats>,
}

/// Rule 2 over every node except the log's output.
pub fn rule2_nodes(log: &SimulationLog, part: &InputPartition, cfg: &DetectConfig) -> Rule2Result {
    let candidates: BTreeSet<String> = log
        .node_voltages
        .keys()
        .filter(|k| **k != log.output_node)
        .cloned()
        .collect();
    rule2_among(log, part, cfg, &candidates)
}

/// Rule 2 restricted to `candidates`.
pub fn rule2_among(
    log: &SimulationLog,
    part: &InputPartition,
    cfg: &DetectConfig,
    candidates: &BTreeSet<String>,
) -> Rule2Result {
    let mut r = Rule2Result {
        mode: cfg.combine_mode,
        ..Default::default()
    };
    if part.activation.is_empty() {
        return r;
    }
    let devs: BTreeMap<&String, Vec<f64>> = candidates
        .iter()
        .filter_map(|c| log.node_voltages.get(c).map(|v| (c, differences(v))))
        .collect();
    let steps = log.len().saturating_sub(1);
    let on_activation: Vec<bool> = (0..steps)
        .map(|j| part.activation.contains(&j) || part.activation.contains(&(j + 1)))
        .collect();

    for (node, d) in &devs {
        let mut stats = DeviationStats {
            activation_max: 0.0,
            normal_max: 0.0,
        };
        for (j, v) in d.iter().enumerate() {
            let slot = if on_activation[j] {
                &mut stats.activation_max
            } else {
                &mut stats.normal_max
            };
            *slot = slot.max(v.abs());
        }
        let threshold = (cfg.dev_rel_threshold * stats.normal_max).max(cfg.dev_abs_floor);
        if reaches(stats.activation_max, threshold) {
            r.set_a.insert((*node).clone());
        }
        r.stats.insert((*node).clone(), stats);
    }

    for &i in part.activation.iter().filter(|&&i| i >= 1) {
        let best = devs.values().map(|d| d[i - 1].abs()).fold(0.0, f64::max);
        if best == 0.0 {
            continue;
        }
        for (node, d) in &devs {
            if d[i - 1].abs() == best {
                r.set_b.insert((*node).clone());
            }
        }
    }

    r.combined = match cfg.combine_mode {
        CombineMode::Union => r.set_a.union(&r.set_b).cloned().collect(),
        CombineMode::Intersection => r.set_a.intersection(&r.set_b).cloned().collect(),
    };
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentStats {
    pub activation_max: f64,
    pub normal_max: f64,
    /// `activation_max / normal_max`, absent when the baseline is zero.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Rule3Result {
    pub devices: BTreeSet<String>,
    pub nodes: BTreeSet<String>,
    pub ratios: BTreeMap<String, CurrentStats>,
}

/// Rule 3. Drain, gate and source of each flagged device become suspects,
/// except rails.
pub fn rule3_nodes(
    log: &SimulationLog,
    n: &Netlist,
    part: &InputPartition,
    cfg: &DetectConfig,
) -> Rule3Result {
    rule3_excluding(log, n, part, cfg, &n.rail_nodes())
}

/// Rule 3 with an explicit set of nodes that never become suspects.
pub fn rule3_excluding(
    log: &SimulationLog,
    n: &Netlist,
    part: &InputPartition,
    cfg: &DetectConfig,
    excluded: &BTreeSet<String>,
) -> Rule3Result {
    let mut r = Rule3Result::default();
    if part.activation.is_empty() {
        return r;
    }
    for (dev, series) in &log.device_currents {
        let mut s = CurrentStats {
            activation_max: 0.0,
            normal_max: 0.0,
            ratio: None,
        };
        for (i, v) in series.iter().enumerate() {
            let slot = if part.activation.contains(&i) {
                &mut s.activation_max
            } else {
                &mut s.normal_max
            };
            *slot = slot.max(v.abs());
        }
        s.ratio = (s.normal_max > 0.0).then(|| s.activation_max / s.normal_max);
        let threshold = (cfg.current_rel_threshold * s.normal_max).max(cfg.current_abs_floor);
        if reaches(s.activation_max, threshold) {
            r.devices.insert(dev.clone());
            if let Some(e) = n.element(dev).filter(|e| e.kind == ElementKind::Mosfet) {
                r.nodes.extend(
                    e.nodes
                        .iter()
                        .take(3)
                        .filter(|x| !excluded.contains(*x) && !is_ground(x))
                        .cloned(),
                );
            }
        }
        r.ratios.insert(dev.clone(), s);
    }
    r
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub output_node: String,
    pub activation_indices: Vec<usize>,
    pub excluded_nodes: Vec<String>,
    pub rule2: Rule2Result,
    pub rule3: Rule3Result,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub trojan_detected: bool,
    pub suspect_nodes: BTreeSet<String>,
    pub suspect_components: BTreeSet<String>,
    pub warnings: Vec<String>,
    pub evidence: Evidence,
}

impl DetectionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report always serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Run rules 1-3 and combine them. Rails, ground, the swept input and the
/// primary output are never suspects.
pub fn detect(
    n: &Netlist,
    log: &SimulationLog,
    spec: &CircuitSpec,
    cfg: &DetectConfig,
) -> Result<DetectionReport, DetectError> {
    cfg.validate()?;
    log.validate()?;
    let mut warnings = Vec::new();
    let net_nodes = n.nodes();
    let output = match n.output_node() {
        Some(o) if log.node_voltages.contains_key(&o) => o,
        Some(o) => {
            warnings.push(format!("netlist output `{o}` not in log; using `{}`", log.output_node));
            log.output_node.clone()
        }
        None => log.output_node.clone(),
    };
    for k in log.node_voltages.keys().filter(|k| !net_nodes.contains(*k)) {
        warnings.push(format!("log node `{k}` is not in the netlist"));
    }
    for k in net_nodes.iter().filter(|k| !is_ground(k) && !log.node_voltages.contains_key(*k)) {
        warnings.push(format!("netlist node `{k}` has no log column"));
    }
    for k in log.device_currents.keys().filter(|k| n.element(k).is_none()) {
        warnings.push(format!("log device `{k}` is not in the netlist"));
    }

    let mut excluded: BTreeSet<String> = n.rail_nodes();
    excluded.insert(output.clone());
    excluded.extend(n.input_node());
    let candidates: BTreeSet<String> = log
        .node_voltages
        .keys()
        .filter(|k| !excluded.contains(*k) && !is_ground(k))
        .filter(|k| net_nodes.is_empty() || net_nodes.contains(*k))
        .cloned()
        .collect();

    let part = classify_output(&log.node_voltages[&output], spec);
    let rule2 = rule2_among(log, &part, cfg, &candidates);
    let rule3 = rule3_excluding(log, n, &part, cfg, &excluded);

    let suspect_nodes: BTreeSet<String> = rule2.combined.union(&rule3.nodes).cloned().collect();
    let mut suspect_components: BTreeSet<String> = rule3.devices.clone();
    for e in &n.elements {
        // Ground is every element's return path, so it does not disqualify.
        let live: Vec<&String> = e.nodes.iter().filter(|x| !is_ground(x)).collect();
        if !live.is_empty() && live.iter().all(|x| suspect_nodes.contains(*x)) {
            suspect_components.insert(e.name.clone());
        }
    }
    Ok(DetectionReport {
        trojan_detected: !suspect_nodes.is_empty() || !suspect_components.is_empty(),
        suspect_nodes,
        suspect_components,
        warnings,
        evidence: Evidence {
            output_node: output,
            activation_indices: part.activation.iter().copied().collect(),
            excluded_nodes: excluded.into_iter().collect(),
            rule2,
            rule3,
        },
    })
}
