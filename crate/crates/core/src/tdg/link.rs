//! Linking per-function graphs through in-file calls.
//!
//! Arguments feed the callee's parameter slots and the callee's return slot
//! feeds the call node. Calls between functions of one recursion cycle are
//! left unlinked so every linked graph stays acyclic across functions.

use std::collections::BTreeMap;

use crate::frontend::ast::{ModuleAst, ParamKind};
use crate::frontend::UserTypeSet;
use crate::rules::StubTable;

use super::{build_tdg, BuildCtx, CallLink, Edge, ProgramTdg, Tdg};

/// Builds and links the graphs of every function in `module`.
pub fn build_program(module: &ModuleAst, users: &UserTypeSet, stubs: &StubTable) -> ProgramTdg {
    let ctx = BuildCtx::new(module, users, stubs);
    let tdgs = module.functions.iter().map(|f| build_tdg(f, &ctx)).collect();
    link_functions(tdgs, module)
}

pub fn link_functions(tdgs: Vec<Tdg>, module: &ModuleAst) -> ProgramTdg {
    let index: BTreeMap<&str, usize> = tdgs
        .iter()
        .enumerate()
        .map(|(i, t)| (t.function.as_str(), i))
        .collect();
    let mut offsets = Vec::with_capacity(tdgs.len());
    let mut nodes = Vec::new();
    for t in &tdgs {
        let off = nodes.len();
        offsets.push(off);
        for n in &t.nodes {
            let mut n = n.clone();
            for e in &mut n.inputs {
                e.from += off;
            }
            nodes.push(n);
        }
    }

    let succ: Vec<Vec<usize>> = tdgs
        .iter()
        .map(|t| {
            let mut s: Vec<usize> = t
                .calls
                .iter()
                .filter_map(|c| index.get(c.callee.as_str()).copied())
                .collect();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    let comp = scc(&succ);

    let mut call_links = Vec::new();
    let mut deferred = Vec::new();
    for (fi, t) in tdgs.iter().enumerate() {
        let off = offsets[fi];
        for c in &t.calls {
            let Some(&gi) = index.get(c.callee.as_str()) else {
                continue;
            };
            let link = CallLink {
                caller: off + c.node,
                callee: c.callee.clone(),
            };
            if comp[gi] == comp[fi] {
                deferred.push(link);
                continue;
            }
            let callee = &tdgs[gi];
            let coff = offsets[gi];
            let shift = |e: &Edge| Edge {
                from: e.from + off,
                port: e.port,
            };
            let kinds = module
                .function(&callee.function)
                .map(|f| f.params.iter().map(|p| p.kind).collect::<Vec<_>>())
                .unwrap_or_default();
            let skip = usize::from(c.bound && callee.has_receiver);
            let positional: Vec<usize> = (skip..callee.params.len())
                .filter(|&i| kinds.get(i).copied().unwrap_or(ParamKind::Positional) == ParamKind::Positional)
                .collect();
            for (a, &pi) in c.args.iter().zip(&positional) {
                nodes[coff + callee.params[pi]].inputs.push(shift(a));
            }
            for (name, v) in &c.keywords {
                if let Some(pi) = callee.param_names.iter().position(|n| n == name) {
                    if pi >= skip && kinds.get(pi) != Some(&ParamKind::VarArgs) {
                        nodes[coff + callee.params[pi]].inputs.push(shift(v));
                    }
                }
            }
            if c.uses_return {
                nodes[off + c.node].inputs.push(Edge::out(coff + callee.return_slot));
            }
            call_links.push(link);
        }
    }

    // `self.attr` reads in methods take the value `__init__` assigned.
    for (fi, t) in tdgs.iter().enumerate() {
        for (node, key) in &t.attr_uses {
            let Some((cls, attr)) = key.rsplit_once('.') else {
                continue;
            };
            let Some(&ii) = index.get(format!("{cls}.__init__").as_str()) else {
                continue;
            };
            if let Some(d) = tdgs[ii].attr_defs.get(attr) {
                nodes[offsets[fi] + node].inputs.push(Edge {
                    from: d.from + offsets[ii],
                    port: d.port,
                });
            }
        }
    }

    ProgramTdg {
        tdgs,
        offsets,
        nodes,
        call_links,
        deferred,
    }
}

/// Component index of every vertex (iterative Tarjan). A vertex with a
/// self loop shares a component with itself, which is what recursion needs.
pub(crate) fn scc(succ: &[Vec<usize>]) -> Vec<usize> {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    let mut ncomp = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work = vec![(root, 0usize)];
        while let Some(&mut (v, ref mut i)) = work.last_mut() {
            if *i == 0 && index[v] == usize::MAX {
                index[v] = next;
                low[v] = next;
                next += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if *i < succ[v].len() {
                let w = succ[v][*i];
                *i += 1;
                if index[w] == usize::MAX {
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            work.pop();
            if let Some(&(p, _)) = work.last() {
                low[p] = low[p].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w] = false;
                    comp[w] = ncomp;
                    if w == v {
                        break;
                    }
                }
                ncomp += 1;
            }
        }
    }
    comp
}
