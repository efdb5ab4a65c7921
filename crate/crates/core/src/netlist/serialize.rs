use super::{ControlCard, Element, ElementKind, Netlist, SubcircuitDef};

/// Render a netlist back to text.
///
/// The output is canonical rather than byte-faithful: terminated subcircuits
/// first, then top-level elements and cards, then any unterminated
/// subcircuits, then `.END`. Reparsing yields a structurally equal AST.
pub fn serialize_netlist(n: &Netlist) -> String {
    let mut out = String::new();
    out.push_str(&n.title);
    out.push('\n');
    for def in n.subcircuits.values().filter(|d| d.terminated) {
        write_subckt(&mut out, def);
    }
    for e in &n.elements {
        out.push_str(&element_line(e));
        out.push('\n');
    }
    for c in &n.cards {
        out.push_str(&card_line(c));
        out.push('\n');
    }
    for def in n.subcircuits.values().filter(|d| !d.terminated) {
        write_subckt(&mut out, def);
    }
    if n.terminated {
        out.push_str(".END\n");
    }
    out
}

fn write_subckt(out: &mut String, def: &SubcircuitDef) {
    let mut head = vec![".SUBCKT".to_string()];
    if !def.name.is_empty() {
        head.push(def.name.clone());
    }
    head.extend(def.ports.iter().cloned());
    head.extend(def.params.iter().map(|(k, v)| format!("{k}={v}")));
    out.push_str(&head.join(" "));
    out.push('\n');
    for e in &def.elements {
        out.push_str(&element_line(e));
        out.push('\n');
    }
    for c in &def.cards {
        out.push_str(&card_line(c));
        out.push('\n');
    }
    if def.terminated {
        out.push_str(".ENDS");
        if !def.name.is_empty() {
            out.push(' ');
            out.push_str(&def.name);
        }
        out.push('\n');
    }
}

pub(crate) fn element_line(e: &Element) -> String {
    let mut toks: Vec<String> = vec![e.name.clone()];
    toks.extend(e.nodes.iter().cloned());
    if matches!(e.kind, ElementKind::Mosfet | ElementKind::SubcktInstance) {
        toks.extend(e.model.iter().cloned());
    }
    if let Some(v) = &e.value {
        toks.push(v.raw.clone());
    }
    toks.extend(e.extra.iter().cloned());
    toks.extend(e.params.iter().map(|(k, v)| format!("{k}={}", v.raw)));
    toks.join(" ")
}

pub(crate) fn card_line(c: &ControlCard) -> String {
    let mut toks = vec![c.directive.clone()];
    toks.extend(c.args.iter().cloned());
    toks.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    #[test]
    fn minimal_netlist() {
        let (n, _) = parse_netlist("* minimal\n.END\n");
        assert_eq!(serialize_netlist(&n), "* minimal\n.END\n");
    }

    #[test]
    fn round_trip_keeps_structure() {
        let text = "diff amp\nM1 d1 inp tail 0 NMOS W=2u L=180n\nM2 d2 inn tail 0 NMOS W=2u L=180n\n\
                    R1 vdd d1 10k\nR2 vdd d2 10k\nI1 tail 0 100u\nVDD vdd 0 DC 1.8\n.DC VDD 0 1.8 0.1\n.END\n";
        let (a, _) = parse_netlist(text);
        let (b, _) = parse_netlist(&serialize_netlist(&a));
        assert!(a.structurally_eq(&b));
        assert_eq!(a.elements.len(), b.elements.len());
    }

    #[test]
    fn unterminated_subckt_round_trips() {
        let text = "t\nR9 a 0 1k\n.SUBCKT buf a y\nM1 y a 0 0 NMOS\n.END\n";
        let (a, _) = parse_netlist(text);
        let (b, _) = parse_netlist(&serialize_netlist(&a));
        assert!(a.structurally_eq(&b));
    }
}
