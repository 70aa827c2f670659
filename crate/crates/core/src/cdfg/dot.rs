// SPDX-License-Identifier: Apache-2.0

//! Graphviz export.

use std::fmt::Write;

use super::{Cdfg, ComponentKind};

fn label(kind: &ComponentKind) -> String {
    match kind {
        ComponentKind::Entry { index: Some(i) } => format!("Entry arg{i}"),
        ComponentKind::Entry { index: None } => "Entry start".into(),
        ComponentKind::Const { value } => format!("Const {value}"),
        ComponentKind::Operator { opcode, latency } => format!("Operator {opcode} L{latency}"),
        ComponentKind::Fork { n } => format!("Fork {n}"),
        ComponentKind::Merge { n } => format!("Merge {n}"),
        ComponentKind::Mux { n } => format!("Mux {n}"),
        ComponentKind::Buffer { capacity } => format!("Buffer {capacity}"),
        other => other.name().to_string(),
    }
}

/// One node line per component in id order, then one edge line per
/// channel in id order. Control channels are dashed.
pub fn export_dot(g: &Cdfg) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "digraph \"{}\" {{", g.name);
    let _ = writeln!(s, "  node [shape=box];");
    for c in &g.components {
        let _ = writeln!(s, "  n{} [label=\"{}: {}\"];", c.id, c.id, label(&c.kind));
    }
    for ch in &g.channels {
        let style = if ch.width == 0 { ", style=dashed" } else { "" };
        let _ = writeln!(
            s,
            "  n{} -> n{} [label=\"{}:{}->{}\"{}];",
            ch.src.component, ch.dst.component, ch.width, ch.src.port, ch.dst.port, style
        );
    }
    s.push_str("}\n");
    s
}
