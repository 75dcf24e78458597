//! Graphviz export: one node per event labelled with its communication,
//! solid edges for flow/causality, dashed undirected edges for conflict.
//! Prime structures show only immediate causality.

use std::fmt::Write as _;

use sessfes::events::{EsKind, EventLabel, EventStructure};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn render<E: EventLabel + std::fmt::Display + PartialEq>(es: &EventStructure<E>, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", escape(name));
    let _ = writeln!(out, "  node [shape=box, fontname=\"monospace\"];");
    for (i, e) in es.events.iter().enumerate() {
        let _ = writeln!(out, "  e{i} [label=\"{}\", tooltip=\"{}\"];", escape(&e.io_label()), escape(&e.to_string()));
    }
    for &(a, b) in &es.causes {
        let immediate = es.kind == EsKind::Flow || !(0..es.len()).any(|c| es.prec(a, c) && es.prec(c, b));
        if immediate {
            let _ = writeln!(out, "  e{a} -> e{b};");
        }
    }
    for (a, b) in es.conflict_pairs() {
        let _ = writeln!(out, "  e{a} -> e{b} [style=dashed, dir=none, color=red];");
    }
    out.push_str("}\n");
    out
}
