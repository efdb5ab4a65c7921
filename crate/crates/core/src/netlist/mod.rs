//! SPICE netlist subset: AST, total parser, serializer and node connectivity.

mod graph;
pub mod lexer;
pub(crate) mod parse;
mod serialize;
mod value;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use graph::{connectivity_graph, NodeGraph};
pub use parse::{parse_netlist, IssueCategory, ParseIssue};
pub use serialize::serialize_netlist;
pub use value::{PhysicalValue, Suffix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ElementKind {
    Mosfet,
    Resistor,
    Capacitor,
    VSource,
    ISource,
    SubcktInstance,
}

impl ElementKind {
    pub fn from_prefix(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'M' => Some(ElementKind::Mosfet),
            'R' => Some(ElementKind::Resistor),
            'C' => Some(ElementKind::Capacitor),
            'V' => Some(ElementKind::VSource),
            'I' => Some(ElementKind::ISource),
            'X' => Some(ElementKind::SubcktInstance),
            _ => None,
        }
    }

    pub fn prefix(self) -> char {
        match self {
            ElementKind::Mosfet => 'M',
            ElementKind::Resistor => 'R',
            ElementKind::Capacitor => 'C',
            ElementKind::VSource => 'V',
            ElementKind::ISource => 'I',
            ElementKind::SubcktInstance => 'X',
        }
    }

    /// Terminal count of a well-formed element; `None` for subcircuit instances.
    pub fn arity(self) -> Option<usize> {
        match self {
            ElementKind::Mosfet => Some(4),
            ElementKind::SubcktInstance => None,
            _ => Some(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub kind: ElementKind,
    pub name: String,
    /// Terminals in order; MOSFET terminals are drain, gate, source, bulk.
    pub nodes: Vec<String>,
    /// MOSFET model or, for `X` instances, the subcircuit name.
    pub model: Option<String>,
    pub value: Option<PhysicalValue>,
    /// `key=value` parameters, keys lower-cased.
    pub params: BTreeMap<String, PhysicalValue>,
    /// Tokens kept verbatim: waveform functions, `AC` specs, symbolic parameters.
    pub extra: Vec<String>,
    pub line_no: usize,
}

impl Element {
    /// Drain, gate and source for a MOSFET; every terminal otherwise.
    pub fn signal_terminals(&self) -> &[String] {
        if self.kind == ElementKind::Mosfet && self.nodes.len() >= 4 {
            &self.nodes[..3]
        } else {
            &self.nodes
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CardKind {
    Model,
    Param,
    Dc,
    Tran,
    Print,
    Options,
    End,
    Ends,
    Subckt,
    Unknown,
}

impl CardKind {
    pub fn from_directive(directive: &str) -> Self {
        match directive.to_ascii_uppercase().as_str() {
            ".MODEL" => CardKind::Model,
            ".PARAM" => CardKind::Param,
            ".DC" => CardKind::Dc,
            ".TRAN" => CardKind::Tran,
            ".PRINT" => CardKind::Print,
            ".OPTIONS" => CardKind::Options,
            ".END" => CardKind::End,
            ".ENDS" => CardKind::Ends,
            ".SUBCKT" => CardKind::Subckt,
            _ => CardKind::Unknown,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlCard {
    pub kind: CardKind,
    /// Directive as written, e.g. `.tr` or `.OPTION`.
    pub directive: String,
    pub args: Vec<String>,
    pub line_no: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubcircuitDef {
    pub name: String,
    pub ports: Vec<String>,
    pub params: BTreeMap<String, String>,
    pub elements: Vec<Element>,
    pub cards: Vec<ControlCard>,
    /// Line of the `.SUBCKT` card.
    pub line_no: usize,
    /// Whether a matching `.ENDS` closed the definition.
    pub terminated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceLine {
    pub line_no: usize,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Netlist {
    pub title: String,
    pub elements: Vec<Element>,
    pub cards: Vec<ControlCard>,
    /// Keyed by lower-cased subcircuit name.
    pub subcircuits: BTreeMap<String, SubcircuitDef>,
    pub terminated: bool,
    pub source_lines: Vec<SourceLine>,
    /// The text this netlist was parsed from.
    #[serde(skip)]
    pub source: String,
}

const MIN_ELEMENTS_FOR_DEGREE_RAILS: usize = 6;

const GROUND_NAMES: [&str; 3] = ["0", "gnd", "gnd!"];

pub fn is_ground(node: &str) -> bool {
    GROUND_NAMES.iter().any(|g| g.eq_ignore_ascii_case(node))
}

/// `[A-Za-z0-9_]+`
pub fn is_valid_identifier(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Netlist {
    /// Copy with line numbers and source text cleared, for structural comparison.
    pub fn structure(&self) -> Netlist {
        let mut n = self.clone();
        n.source.clear();
        n.source_lines.clear();
        for e in &mut n.elements {
            e.line_no = 0;
        }
        for c in &mut n.cards {
            c.line_no = 0;
        }
        for def in n.subcircuits.values_mut() {
            def.line_no = 0;
            for e in &mut def.elements {
                e.line_no = 0;
            }
            for c in &mut def.cards {
                c.line_no = 0;
            }
        }
        n
    }

    pub fn structurally_eq(&self, other: &Netlist) -> bool {
        self.structure() == other.structure()
    }

    /// Top-level and subcircuit elements.
    pub fn all_elements(&self) -> impl Iterator<Item = &Element> {
        self.elements
            .iter()
            .chain(self.subcircuits.values().flat_map(|d| d.elements.iter()))
    }

    /// Top-level and subcircuit control cards.
    pub fn all_cards(&self) -> impl Iterator<Item = &ControlCard> {
        self.cards
            .iter()
            .chain(self.subcircuits.values().flat_map(|d| d.cards.iter()))
    }

    pub fn element(&self, name: &str) -> Option<&Element> {
        self.elements
            .iter()
            .find(|e| e.name.eq_ignore_ascii_case(name))
    }

    pub fn subcircuit(&self, name: &str) -> Option<&SubcircuitDef> {
        self.subcircuits.get(&name.to_ascii_lowercase())
    }

    /// Names declared by `.MODEL` cards anywhere in the netlist.
    pub fn model_names(&self) -> BTreeSet<String> {
        self.all_cards()
            .filter(|c| c.kind == CardKind::Model)
            .filter_map(|c| c.args.first().cloned())
            .collect()
    }

    /// Declared model name for a device polarity (`NMOS`/`PMOS`), if any.
    pub fn model_for_polarity(&self, polarity: &str) -> Option<String> {
        self.all_cards()
            .filter(|c| c.kind == CardKind::Model && c.args.len() >= 2)
            .find(|c| c.args[1].eq_ignore_ascii_case(polarity))
            .map(|c| c.args[0].clone())
    }

    /// Top-level nodes.
    pub fn nodes(&self) -> BTreeSet<String> {
        self.elements
            .iter()
            .flat_map(|e| e.nodes.iter().cloned())
            .collect()
    }

    /// Node references printed as `V(node)` by `.PRINT` cards.
    pub fn printed_nodes(&self) -> Vec<String> {
        self.all_cards()
            .filter(|c| c.kind == CardKind::Print)
            .flat_map(|c| c.args.iter())
            .filter_map(|a| voltage_probe(a))
            .collect()
    }

    /// Source swept by the first `.DC` card, falling back to a `Vin*` source.
    pub fn swept_source(&self) -> Option<&Element> {
        let named = self
            .cards
            .iter()
            .find(|c| c.kind == CardKind::Dc)
            .and_then(|c| c.args.first());
        if let Some(name) = named {
            if let Some(e) = self.element(name) {
                return Some(e);
            }
        }
        self.elements.iter().find(|e| {
            e.kind == ElementKind::VSource && e.name.to_ascii_lowercase().starts_with("vin")
        })
    }

    pub fn input_node(&self) -> Option<String> {
        self.swept_source().and_then(|e| e.nodes.first().cloned())
    }

    /// Primary output: first printed node, else a node named `out`/`vout`.
    pub fn output_node(&self) -> Option<String> {
        if let Some(n) = self.printed_nodes().into_iter().next() {
            return Some(n);
        }
        let nodes = self.nodes();
        ["out", "vout"].iter().find_map(|want| {
            nodes
                .iter()
                .find(|n| n.eq_ignore_ascii_case(want))
                .cloned()
        })
    }

    /// Ground, nodes pinned by fixed voltage sources, and nodes touching more
    /// than half of the top-level elements.
    pub fn rail_nodes(&self) -> BTreeSet<String> {
        let mut rails: BTreeSet<String> = self.nodes().into_iter().filter(|n| is_ground(n)).collect();
        let swept = self.swept_source().map(|e| e.name.clone());
        for e in &self.elements {
            if e.kind != ElementKind::VSource || Some(&e.name) == swept.as_ref() {
                continue;
            }
            if e.nodes.len() == 2 && is_ground(&e.nodes[1]) && !is_ground(&e.nodes[0]) {
                rails.insert(e.nodes[0].clone());
            }
        }
        // Bulk ties are excluded: they would make every well-node look like a rail.
        if self.elements.len() >= MIN_ELEMENTS_FOR_DEGREE_RAILS {
            let mut degree: BTreeMap<&str, usize> = BTreeMap::new();
            for e in &self.elements {
                for n in e.signal_terminals() {
                    *degree.entry(n.as_str()).or_default() += 1;
                }
            }
            let half = self.elements.len() / 2;
            rails.extend(
                degree
                    .into_iter()
                    .filter(|(_, d)| *d > half)
                    .map(|(n, _)| n.to_string()),
            );
        }
        rails
    }

    /// Positive supply: the pinned rail with the highest DC value.
    pub fn supply_node(&self) -> Option<String> {
        let swept = self.swept_source().map(|e| e.name.clone());
        self.elements
            .iter()
            .filter(|e| e.kind == ElementKind::VSource && Some(&e.name) != swept.as_ref())
            .filter(|e| e.nodes.len() == 2 && is_ground(&e.nodes[1]) && !is_ground(&e.nodes[0]))
            .filter_map(|e| e.value.as_ref().map(|v| (v.si(), e.nodes[0].clone())))
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, n)| n)
    }
}

/// `V(node)` → `node`.
pub fn voltage_probe(token: &str) -> Option<String> {
    let upper = token.to_ascii_uppercase();
    if upper.starts_with("V(") && token.ends_with(')') {
        let inner = token[2..token.len() - 1].trim();
        if !inner.is_empty() && !inner.contains(',') {
            return Some(inner.to_string());
        }
    }
    None
}
