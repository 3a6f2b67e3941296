//! Type dependency graphs: one per function, linked into a program graph
//! through in-file calls.

mod builder;
mod dot;
mod link;

use std::collections::{BTreeMap, BTreeSet};

use crate::rules::Op;
use crate::types::PyType;

pub use builder::{build_tdg, BuildCtx};
pub use dot::{export_dot, export_dot_with};
pub use link::{build_program, link_functions};
pub(crate) use link::scc;

pub type NodeId = usize;

/// Which output of a node an edge reads. Branch nodes have two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Port {
    Out,
    True,
    False,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: NodeId,
    pub port: Port,
}

impl Edge {
    pub fn out(from: NodeId) -> Edge {
        Edge {
            from,
            port: Port::Out,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Param(usize),
    Local,
    Return,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    /// One occurrence of a variable, or a function's return value.
    Symbol {
        name: String,
        order: usize,
        role: Role,
        /// Types known without inputs: the receiver class, or `None` for a
        /// function that can fall off its end.
        seed: Option<PyType>,
    },
    Expr(Op),
    /// `isinstance(var, guard)`: the true port yields the guard types, the
    /// false port passes the input through.
    Branch {
        var: String,
        guard: BTreeSet<PyType>,
    },
    /// Join of control-flow paths. Strict merges are blank while any input
    /// is blank; loop heads are not strict.
    Merge { strict: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdgNode {
    pub id: String,
    pub kind: NodeKind,
    pub inputs: Vec<Edge>,
    pub line: u32,
}

impl TdgNode {
    pub fn is_slot(&self) -> bool {
        matches!(self.kind, NodeKind::Symbol { .. })
    }

    pub fn role(&self) -> Option<Role> {
        match &self.kind {
            NodeKind::Symbol { role, .. } => Some(*role),
            _ => None,
        }
    }

    pub fn symbol_name(&self) -> Option<&str> {
        match &self.kind {
            NodeKind::Symbol { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            NodeKind::Symbol { .. } => "symbol",
            NodeKind::Expr(_) => "expr",
            NodeKind::Branch { .. } => "branch",
            NodeKind::Merge { .. } => "merge",
        }
    }
}

/// A call to an in-file function, resolved when the program is linked.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingCall {
    /// The `LinkedCall` node, or the instantiation constant for `__init__`.
    pub node: NodeId,
    pub callee: String,
    pub args: Vec<Edge>,
    pub keywords: Vec<(String, Edge)>,
    /// The callee's receiver parameter is bound and takes no argument.
    pub bound: bool,
    /// The call node receives the callee's return slot.
    pub uses_return: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tdg {
    pub function: String,
    pub class_name: Option<String>,
    pub nodes: Vec<TdgNode>,
    /// Parameter symbols in declaration order.
    pub params: Vec<NodeId>,
    /// Names of positional parameters, aligned with `params`.
    pub param_names: Vec<String>,
    pub has_receiver: bool,
    pub return_slot: NodeId,
    pub calls: Vec<PendingCall>,
    /// `__init__` only: the value last assigned to each `self.<attr>`.
    pub attr_defs: BTreeMap<String, Edge>,
    /// Reads of `self.<attr>` in other methods, to be fed by `__init__`.
    pub attr_uses: Vec<(NodeId, String)>,
}

impl Tdg {
    pub fn slots(&self) -> impl Iterator<Item = (NodeId, &TdgNode)> {
        self.nodes.iter().enumerate().filter(|(_, n)| n.is_slot())
    }

    pub fn node_by_id(&self, id: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn edges(&self) -> Vec<(NodeId, NodeId, Port)> {
        let mut out = Vec::new();
        for (to, n) in self.nodes.iter().enumerate() {
            for e in &n.inputs {
                out.push((e.from, to, e.port));
            }
        }
        out
    }
}

/// Formats a symbol id. Names ending in a digit get a `.` before the order
/// so that ids stay unique (`x1` then order 0 is `x1.0`, not `x10`).
pub fn symbol_key(name: &str, order: usize) -> String {
    if name.ends_with(|c: char| c.is_ascii_digit()) {
        format!("{name}.{order}")
    } else {
        format!("{name}{order}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallLink {
    pub caller: NodeId,
    pub callee: String,
}

/// All functions of one file in a single node arena with global ids.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramTdg {
    pub tdgs: Vec<Tdg>,
    /// Global id of each function's local node 0.
    pub offsets: Vec<usize>,
    /// Every node with inputs rewritten to global ids and call links added.
    pub nodes: Vec<TdgNode>,
    pub call_links: Vec<CallLink>,
    /// Calls inside recursion cycles; never linked, so they stay blank.
    pub deferred: Vec<CallLink>,
}

impl ProgramTdg {
    pub fn function_index(&self, qualname: &str) -> Option<usize> {
        self.tdgs.iter().position(|t| t.function == qualname)
    }

    pub fn global(&self, func: usize, local: NodeId) -> NodeId {
        self.offsets[func] + local
    }

    /// Function index and local id of a global node.
    pub fn locate(&self, global: NodeId) -> (usize, NodeId) {
        let f = self.offsets.partition_point(|&o| o <= global) - 1;
        (f, global - self.offsets[f])
    }

    pub fn slot_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.is_slot())
            .map(|(i, _)| i)
    }
}
