//! Graphviz export.

use std::fmt::Write;

use crate::types::CandidateSet;

use super::{NodeKind, Port, Tdg};

pub fn export_dot(tdg: &Tdg) -> String {
    export_dot_with(tdg, None)
}

/// Renders `tdg` with one DOT node per graph node. When `values` is given
/// (indexed like `tdg.nodes`) each label also shows the node's candidates.
pub fn export_dot_with(tdg: &Tdg, values: Option<&[CandidateSet]>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", escape(&tdg.function));
    let _ = writeln!(out, "  node [fontname=\"monospace\"];");
    for (i, n) in tdg.nodes.iter().enumerate() {
        let kind = match &n.kind {
            NodeKind::Symbol { .. } => "symbol".to_string(),
            NodeKind::Expr(op) => op.label(),
            NodeKind::Branch { var, guard } => {
                let g: Vec<String> = guard.iter().map(|t| t.to_string()).collect();
                format!("isinstance({var}, {})", g.join(" | "))
            }
            NodeKind::Merge { strict: true } => "merge".to_string(),
            NodeKind::Merge { strict: false } => "loop merge".to_string(),
        };
        let mut label = format!("{}\\n{}", escape(&n.id), escape(&kind));
        if let Some(v) = values.and_then(|v| v.get(i)) {
            let c = if v.is_blank() {
                "blank".to_string()
            } else {
                v.render().unwrap_or_else(|| "{}".to_string())
            };
            let _ = write!(label, "\\n{}", escape(&c));
        }
        let shape = match n.kind {
            NodeKind::Symbol { .. } => "box",
            NodeKind::Expr(_) => "ellipse",
            NodeKind::Branch { .. } => "diamond",
            NodeKind::Merge { .. } => "circle",
        };
        let _ = writeln!(out, "  n{i} [label=\"{label}\", shape={shape}];");
    }
    for (from, to, port) in tdg.edges() {
        match port {
            Port::Out => {
                let _ = writeln!(out, "  n{from} -> n{to};");
            }
            Port::True => {
                let _ = writeln!(out, "  n{from} -> n{to} [label=\"T\"];");
            }
            Port::False => {
                let _ = writeln!(out, "  n{from} -> n{to} [label=\"F\"];");
            }
        }
    }
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
