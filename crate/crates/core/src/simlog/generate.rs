//! Synthetic sweep logs with a parameterized Trojan signature.
//!
//! Clean node voltages are smooth saturating curves whose coefficients are
//! hashed from the node name and seed. Inside the trigger window the output
//! leaves its spec band, impacted nodes jump by `node_deviation` and leak
//! back down, their neighbors follow weakly, and the charge-pump devices
//! draw `current_surge_factor` times their bias current.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{CircuitSpec, SimlogError, SimulationLog};
use crate::inject::InjectionRecord;
use crate::netlist::{connectivity_graph, is_ground, ElementKind, Netlist};
use crate::util::{fnv1a, round_sig};

const NOISE_SALT: u64 = 0x6e6f_6973_6500_0001;
const CURRENT_SALT: u64 = 0x6375_7272_0000_0002;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for Sweep {
    fn default() -> Self {
        Sweep { lo: 0.0, hi: 1.8, step: 0.05 }
    }
}

impl Sweep {
    pub fn samples(&self) -> Result<Vec<f64>, SimlogError> {
        if !(self.step > 0.0) || !self.lo.is_finite() || !self.hi.is_finite() || self.hi <= self.lo {
            return Err(SimlogError::EmptySweep);
        }
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        let xs: Vec<f64> = (0..count)
            .map(|i| round_sig(self.lo + i as f64 * self.step, 6))
            .collect();
        if xs.len() < 2 || xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SimlogError::EmptySweep);
        }
        Ok(xs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BehaviorModel {
    /// Half-open input interval `[lo, hi)` where the Trojan is active.
    pub trigger_window: (f64, f64),
    pub out_violation: f64,
    pub node_deviation: f64,
    pub current_surge_factor: f64,
    pub noise_sigma: f64,
    /// Fraction of `node_deviation` seen by graph neighbors of impacted nodes.
    pub neighbor_coupling: f64,
    pub seed: u64,
}

impl Default for BehaviorModel {
    fn default() -> Self {
        BehaviorModel {
            trigger_window: (0.8, 1.0),
            out_violation: 0.2,
            node_deviation: 0.5,
            current_surge_factor: 5.0,
            noise_sigma: 0.0,
            neighbor_coupling: 0.05,
            seed: 0,
        }
    }
}

fn node_rng(name: &str, seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(fnv1a(name.as_bytes()) ^ seed ^ salt)
}

fn rail_value(n: &Netlist, rail: &str, fallback: f64) -> f64 {
    n.elements
        .iter()
        .filter(|e| e.kind == ElementKind::VSource && e.nodes.len() == 2)
        .find(|e| e.nodes[0] == rail && is_ground(&e.nodes[1]))
        .and_then(|e| e.value.as_ref().map(|v| v.si()))
        .unwrap_or(fallback)
}

pub fn gen_log(
    n: &Netlist,
    rec: Option<&InjectionRecord>,
    model: &BehaviorModel,
    sweep: &Sweep,
    spec: &CircuitSpec,
) -> Result<SimulationLog, SimlogError> {
    let xs = sweep.samples()?;
    let output = n
        .output_node()
        .ok_or_else(|| SimlogError::MissingOutput("<none>".into()))?;
    let input = n.input_node();
    let rails = n.rail_nodes();
    let supply = n
        .supply_node()
        .map(|s| rail_value(n, &s, spec.v_out_max))
        .unwrap_or(spec.v_out_max);
    let nodes: BTreeSet<String> = n.nodes().into_iter().filter(|x| !is_ground(x)).collect();

    let center = (sweep.lo + sweep.hi) / 2.0;
    let width = (sweep.hi - sweep.lo) / 4.0;
    let mid = (spec.v_out_min + spec.v_out_max) / 2.0;
    let half = (spec.v_out_max - spec.v_out_min) / 2.0;

    let mut voltages: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for node in &nodes {
        let series: Vec<f64> = if *node == output {
            xs.iter().map(|x| mid + 0.4 * half * ((x - center) / width).tanh()).collect()
        } else if Some(node) == input.as_ref() {
            xs.clone()
        } else if rails.contains(node) {
            vec![rail_value(n, node, supply); xs.len()]
        } else {
            let mut rng = node_rng(node, model.seed, 0);
            let base = rng.gen_range(0.2..1.6);
            let amp = rng.gen_range(0.05..0.25);
            let c = rng.gen_range(sweep.lo..sweep.hi);
            let w = (sweep.hi - sweep.lo) * rng.gen_range(0.4..1.0);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            xs.iter().map(|x| base + sign * amp * ((x - c) / w).tanh()).collect()
        };
        voltages.insert(node.clone(), series);
    }

    let mut currents: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for e in n.elements.iter().filter(|e| e.kind == ElementKind::Mosfet) {
        let bias = round_sig(node_rng(&e.name, model.seed, CURRENT_SALT).gen_range(5e-6..80e-6), 3);
        currents.insert(e.name.clone(), vec![bias; xs.len()]);
    }

    if let Some(rec) = rec {
        if let Some(missing) = rec.impacted_nodes.iter().find(|x| !nodes.contains(*x)) {
            return Err(SimlogError::UnknownNode(missing.clone()));
        }
        let (a, b) = model.trigger_window;
        let window: Vec<usize> = (0..xs.len()).filter(|&i| a <= xs[i] && xs[i] < b).collect();
        let nwin = window.len() as f64;
        let decay = |k: usize| 1.0 - k as f64 / nwin;

        let graph = connectivity_graph(n);
        let skip = |x: &String| rails.contains(x) || is_ground(x) || *x == output || Some(x) == input.as_ref();
        let neighbors: BTreeSet<String> = rec
            .impacted_nodes
            .iter()
            .flat_map(|x| graph.neighbors(x))
            .filter(|x| !rec.impacted_nodes.contains(x) && !skip(x))
            .collect();
        let surging: Vec<String> = match &rec.wiring {
            Some(w) => n
                .elements
                .iter()
                .filter(|e| e.kind == ElementKind::Mosfet && rec.trojan_components.contains(&e.name))
                .filter(|e| e.nodes.len() >= 3 && (e.nodes[0] == w.cap_node || e.nodes[2] == w.cap_node))
                .map(|e| e.name.clone())
                .collect(),
            None => Vec::new(),
        };

        for (k, &i) in window.iter().enumerate() {
            let out = voltages.get_mut(&output).expect("output node is a netlist node");
            out[i] += (spec.v_out_max - spec.v_out_min) + model.out_violation;
            for x in rec.impacted_nodes.iter().filter(|x| **x != output) {
                voltages.get_mut(x).expect("checked above")[i] += model.node_deviation * decay(k);
            }
            for x in &neighbors {
                voltages.get_mut(x).expect("neighbor is a node")[i] +=
                    model.neighbor_coupling * model.node_deviation * decay(k);
            }
            for d in &surging {
                currents.get_mut(d).expect("surging device is a MOSFET")[i] *= model.current_surge_factor;
            }
        }
    }

    if model.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, model.noise_sigma).expect("sigma is positive and finite");
        for (node, series) in voltages.iter_mut() {
            if rails.contains(node) || Some(node) == input.as_ref() {
                continue;
            }
            let mut rng = node_rng(node, model.seed, NOISE_SALT);
            for v in series.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }

    for series in voltages.values_mut().chain(currents.values_mut()) {
        for v in series.iter_mut() {
            *v = round_sig(*v, 6);
        }
    }
    Ok(SimulationLog {
        inputs: xs,
        node_voltages: voltages,
        device_currents: currents,
        output_node: output,
    })
}
