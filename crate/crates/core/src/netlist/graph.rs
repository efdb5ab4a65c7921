use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Element, Netlist};

/// Node connectivity of the top-level circuit.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeGraph {
    pub nodes: BTreeSet<String>,
    /// node → (neighbor, via element)
    pub adjacency: BTreeMap<String, BTreeSet<(String, String)>>,
    /// Number of element terminals touching each node.
    pub degree: BTreeMap<String, usize>,
}

impl NodeGraph {
    pub fn from_elements<'a>(elements: impl IntoIterator<Item = &'a Element>) -> Self {
        let mut g = NodeGraph::default();
        for e in elements {
            for n in &e.nodes {
                g.nodes.insert(n.clone());
                g.adjacency.entry(n.clone()).or_default();
                *g.degree.entry(n.clone()).or_default() += 1;
            }
            for (i, a) in e.nodes.iter().enumerate() {
                for b in &e.nodes[i + 1..] {
                    if a == b {
                        continue;
                    }
                    g.adjacency
                        .entry(a.clone())
                        .or_default()
                        .insert((b.clone(), e.name.clone()));
                    g.adjacency
                        .entry(b.clone())
                        .or_default()
                        .insert((a.clone(), e.name.clone()));
                }
            }
        }
        g
    }

    pub fn degree(&self, node: &str) -> usize {
        self.degree.get(node).copied().unwrap_or(0)
    }

    pub fn neighbors(&self, node: &str) -> BTreeSet<String> {
        self.adjacency
            .get(node)
            .map(|s| s.iter().map(|(n, _)| n.clone()).collect())
            .unwrap_or_default()
    }
}

pub fn connectivity_graph(n: &Netlist) -> NodeGraph {
    NodeGraph::from_elements(&n.elements)
}
