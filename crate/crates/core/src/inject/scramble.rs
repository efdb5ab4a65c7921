//! Disguise an inserted Trojan: shuffle element order, give its devices and
//! internal nodes host-style names, and resize W, L and capacitances.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{InjectError, InjectionKind, InjectionRecord};
use crate::netlist::{parse_netlist, serialize_netlist, ElementKind, PhysicalValue};
use crate::util::{format_number, round_sig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScrambleMaps {
    pub elements: BTreeMap<String, String>,
    pub nodes: BTreeMap<String, String>,
    /// `<element>.<param>` → multiplier applied.
    pub factors: BTreeMap<String, f64>,
}

fn numeric_suffix(name: &str) -> Option<u64> {
    let digits: String = name.chars().rev().take_while(|c| c.is_ascii_digit()).collect();
    digits.chars().rev().collect::<String>().parse().ok()
}

fn perturb(v: &PhysicalValue, factor: f64) -> PhysicalValue {
    let magnitude = round_sig(v.magnitude * factor, 6);
    PhysicalValue {
        magnitude,
        suffix: v.suffix,
        raw: format!("{}{}{}", format_number(magnitude), v.suffix_text(), v.unit_text()),
    }
}

pub fn scramble(
    text: &str,
    rec: &InjectionRecord,
    seed: u64,
) -> Result<(String, InjectionRecord, ScrambleMaps), InjectError> {
    if rec.kind != InjectionKind::Trojan {
        return Err(InjectError::NotTrojan);
    }
    let wiring = rec.wiring.clone().ok_or(InjectError::NotTrojan)?;
    let mut net = parse_netlist(text).0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut maps = ScrambleMaps::default();

    let troj: BTreeSet<String> = rec.trojan_components.clone();
    let mut next_index: BTreeMap<char, u64> = BTreeMap::new();
    for e in net.all_elements().filter(|e| !troj.contains(&e.name)) {
        let prefix = e.kind.prefix();
        let n = numeric_suffix(&e.name).unwrap_or(0);
        let slot = next_index.entry(prefix).or_insert(0);
        *slot = (*slot).max(n);
    }
    let mut names: Vec<String> = troj.iter().cloned().collect();
    names.shuffle(&mut rng);
    for old in names {
        let Some(e) = net.elements.iter().find(|e| e.name == old) else { continue };
        let prefix = e.kind.prefix();
        let slot = next_index.entry(prefix).or_insert(0);
        *slot += 1;
        maps.elements.insert(old, format!("{prefix}{slot}"));
    }

    let host_nodes = net.nodes();
    let numeric_nodes = host_nodes.iter().any(|n| n.bytes().all(|b| b.is_ascii_digit()));
    let mut next_node = host_nodes.iter().filter_map(|n| n.parse::<u64>().ok()).max().unwrap_or(0);
    let mut internal = vec![wiring.cap_node.clone(), wiring.det_node.clone()];
    internal.shuffle(&mut rng);
    for old in internal {
        let new = loop {
            next_node += 1;
            let candidate = if numeric_nodes {
                next_node.to_string()
            } else {
                format!("n{next_node}")
            };
            if !host_nodes.contains(&candidate) {
                break candidate;
            }
        };
        maps.nodes.insert(old, new);
    }

    for e in &mut net.elements {
        for n in &mut e.nodes {
            if let Some(new) = maps.nodes.get(n) {
                *n = new.clone();
            }
        }
        let Some(new) = maps.elements.get(&e.name).cloned() else { continue };
        match e.kind {
            ElementKind::Mosfet => {
                for key in ["w", "l"] {
                    if let Some(v) = e.params.get(key) {
                        let f = round_sig(rng.gen_range(0.5..=1.5), 4).clamp(0.5, 1.5);
                        maps.factors.insert(format!("{new}.{key}"), f);
                        let p = perturb(v, f);
                        e.params.insert(key.to_string(), p);
                    }
                }
            }
            ElementKind::Capacitor => {
                if let Some(v) = &e.value {
                    let f = round_sig(rng.gen_range(0.5..=1.5), 4).clamp(0.5, 1.5);
                    maps.factors.insert(format!("{new}.value"), f);
                    e.value = Some(perturb(v, f));
                }
            }
            _ => {}
        }
        e.name = new;
    }
    net.elements.shuffle(&mut rng);

    let rename_node = |n: &String| maps.nodes.get(n).cloned().unwrap_or_else(|| n.clone());
    let mut out = rec.clone();
    out.trojan_components = rec
        .trojan_components
        .iter()
        .map(|c| maps.elements.get(c).cloned().unwrap_or_else(|| c.clone()))
        .collect();
    out.impacted_nodes = rec.impacted_nodes.iter().map(rename_node).collect();
    let mut w = wiring;
    w.cap_node = rename_node(&w.cap_node);
    w.det_node = rename_node(&w.det_node);
    out.wiring = Some(w);
    Ok((serialize_netlist(&net), out, maps))
}
