//! Ground-truth generation: seeded syntax bugs, Trojan insertion and
//! Trojan scrambling.

mod bugs;
mod scramble;
mod trojan;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::lint::Complexity;
pub use bugs::{inject_bugs, inject_rule, injectable_rules};
pub use scramble::{scramble, ScrambleMaps};
pub use trojan::{inject_trojan, parse_label, TEMPLATE_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugPlan {
    pub easy: usize,
    pub medium: usize,
    pub difficult: usize,
    pub seed: u64,
}

impl BugPlan {
    pub fn total(&self) -> usize {
        self.easy + self.medium + self.difficult
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InjectionKind {
    Bugs,
    Trojan,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BugTruth {
    pub rule_id: String,
    pub line_no: usize,
}

/// Where a Trojan instance is wired into its host.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrojanWiring {
    pub trigger_node: String,
    pub payload_node: String,
    pub cap_node: String,
    pub det_node: String,
    pub vdd: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionRecord {
    pub kind: InjectionKind,
    pub label: String,
    #[serde(default)]
    pub bug_truth: Vec<BugTruth>,
    #[serde(default)]
    pub trojan_components: BTreeSet<String>,
    #[serde(default)]
    pub impacted_nodes: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wiring: Option<TrojanWiring>,
}

impl InjectionRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record always serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InjectError {
    #[error("plan asks for {requested} {complexity:?} bug(s) but only {available} distinct rule(s) have an injection site")]
    InsufficientSites {
        complexity: Complexity,
        requested: usize,
        available: usize,
    },
    #[error("rule `{0}` has no injection site in this netlist")]
    NoSite(String),
    #[error("unknown rule id `{0}`")]
    UnknownRule(String),
    #[error("host netlist is not lint-clean: {0:?}")]
    HostNotClean(Vec<String>),
    #[error("node `{0}` not found")]
    NodeNotFound(String),
    #[error("node `{0}` is ground or a supply rail")]
    GroundTarget(String),
    #[error("trigger and payload are the same node `{0}`")]
    CoincidentTargets(String),
    #[error("host has no supply rail to power the Trojan")]
    NoSupply,
    #[error("record is not a Trojan record")]
    NotTrojan,
}

#[cfg(test)]
mod tests;
