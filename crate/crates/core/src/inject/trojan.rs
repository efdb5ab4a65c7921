//! A2-style analog Trojan: a charge pump driven by the trigger node fills a
//! small capacitor, a detector inverter watches it, and the detector output
//! gates a payload transistor that pulls the payload node to ground.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{InjectError, InjectionKind, InjectionRecord, TrojanWiring};
use crate::netlist::{is_ground, Netlist};

pub const TEMPLATE_SIZE: usize = 7;

enum Pin {
    Trigger,
    Payload,
    Cap,
    Det,
    Vdd,
    Gnd,
}

enum Part {
    Nmos,
    Pmos,
    Cap,
}

struct Blueprint {
    name: &'static str,
    part: Part,
    pins: &'static [Pin],
}

use Pin::*;

const TEMPLATE: [Blueprint; TEMPLATE_SIZE] = [
    Blueprint { name: "Mtj_cp1", part: Part::Pmos, pins: &[Cap, Trigger, Vdd, Vdd] },
    Blueprint { name: "Mtj_cp2", part: Part::Nmos, pins: &[Vdd, Trigger, Cap, Gnd] },
    Blueprint { name: "Mtj_lk", part: Part::Nmos, pins: &[Cap, Gnd, Gnd, Gnd] },
    Blueprint { name: "Mtj_dp", part: Part::Pmos, pins: &[Det, Cap, Vdd, Vdd] },
    Blueprint { name: "Mtj_dn", part: Part::Nmos, pins: &[Det, Cap, Gnd, Gnd] },
    Blueprint { name: "Ctj_trig", part: Part::Cap, pins: &[Cap, Gnd] },
    Blueprint { name: "Mtj_pay", part: Part::Nmos, pins: &[Payload, Det, Gnd, Gnd] },
];

fn fresh(base: &str, taken: &BTreeSet<String>) -> String {
    let lower: BTreeSet<String> = taken.iter().map(|t| t.to_ascii_lowercase()).collect();
    let mut name = base.to_string();
    let mut k = 1;
    while lower.contains(&name.to_ascii_lowercase()) {
        name = format!("{base}_{k}");
        k += 1;
    }
    name
}

/// `<circuit>_troj_<payload>` → `(circuit, payload)`.
pub fn parse_label(label: &str) -> Option<(&str, &str)> {
    let (circuit, payload) = label.rsplit_once("_troj_")?;
    (!circuit.is_empty() && !payload.is_empty()).then_some((circuit, payload))
}

/// Wire the template into `n` with its charge pump on `trigger_node` and its
/// payload switch on `payload_node`. The seven lines go just before `.END`.
pub fn inject_trojan(
    n: &Netlist,
    circuit: &str,
    payload_node: &str,
    trigger_node: &str,
    seed: u64,
) -> Result<(String, InjectionRecord), InjectError> {
    let nodes = n.nodes();
    let rails = n.rail_nodes();
    for target in [payload_node, trigger_node] {
        if !nodes.contains(target) {
            return Err(InjectError::NodeNotFound(target.to_string()));
        }
        if is_ground(target) || rails.contains(target) {
            return Err(InjectError::GroundTarget(target.to_string()));
        }
    }
    if payload_node == trigger_node {
        return Err(InjectError::CoincidentTargets(payload_node.to_string()));
    }
    let vdd = n.supply_node().ok_or(InjectError::NoSupply)?;
    let gnd = nodes.iter().find(|x| is_ground(x)).cloned().unwrap_or_else(|| "0".into());

    let cap = fresh("tj_cap", &nodes);
    let det = fresh("tj_det", &nodes);
    let nmos = n.model_for_polarity("NMOS").unwrap_or_else(|| "NMOS".into());
    let pmos = n.model_for_polarity("PMOS").unwrap_or_else(|| "PMOS".into());
    let mut taken: BTreeSet<String> = n.all_elements().map(|e| e.name.clone()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::with_capacity(TEMPLATE_SIZE);
    let mut components = BTreeSet::new();
    for bp in &TEMPLATE {
        let name = fresh(bp.name, &taken);
        taken.insert(name.clone());
        let pins: Vec<&str> = bp
            .pins
            .iter()
            .map(|p| match p {
                Trigger => trigger_node,
                Payload => payload_node,
                Cap => cap.as_str(),
                Det => det.as_str(),
                Vdd => vdd.as_str(),
                Gnd => gnd.as_str(),
            })
            .collect();
        let line = match bp.part {
            Part::Cap => format!("{name} {} {}p", pins.join(" "), rng.gen_range(1..=5) * 10),
            Part::Nmos | Part::Pmos => {
                let model = if matches!(bp.part, Part::Nmos) { &nmos } else { &pmos };
                let w: f64 = [0.2, 0.3, 0.5, 1.0][rng.gen_range(0..4)];
                format!("{name} {} {model} W={w}u L=180n", pins.join(" "))
            }
        };
        lines.push(line);
        components.insert(name);
    }

    let text = splice_before_end(&n.source, &lines);
    let record = InjectionRecord {
        kind: InjectionKind::Trojan,
        label: format!("{circuit}_troj_{payload_node}"),
        bug_truth: Vec::new(),
        trojan_components: components,
        impacted_nodes: [trigger_node.to_string(), cap.clone(), payload_node.to_string()].into(),
        wiring: Some(TrojanWiring {
            trigger_node: trigger_node.to_string(),
            payload_node: payload_node.to_string(),
            cap_node: cap,
            det_node: det,
            vdd,
        }),
    };
    Ok((text, record))
}

fn splice_before_end(source: &str, lines: &[String]) -> String {
    let eol = if source.contains("\r\n") { "\r\n" } else { "\n" };
    let block: String = lines.iter().map(|l| format!("{l}{eol}")).collect();
    let mut offset = 0;
    let mut end_at = None;
    for l in source.split_inclusive('\n') {
        if l.trim().eq_ignore_ascii_case(".END") {
            end_at = Some(offset);
        }
        offset += l.len();
    }
    match end_at {
        Some(at) => format!("{}{}{}", &source[..at], block, &source[at..]),
        None if source.is_empty() || source.ends_with('\n') => format!("{source}{block}"),
        None => format!("{source}{eol}{block}"),
    }
}
