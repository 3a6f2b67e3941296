//! Graph construction for one function.
//!
//! The walk follows evaluation order. Each variable occurrence becomes a
//! symbol node whose input is the variable's current definition; writes
//! take their input from the assigned expression. Control flow keeps one
//! environment per path and joins paths with merge nodes.

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::ast::*;
use crate::frontend::UserTypeSet;
use crate::rules::{MutateKind, Op, StubTable};
use crate::types::{Ctor, PyType};

use super::{symbol_key, Edge, NodeId, NodeKind, PendingCall, Port, Role, Tdg, TdgNode};

/// Module-level facts needed while building any one function's graph.
pub struct BuildCtx<'a> {
    pub users: &'a UserTypeSet,
    pub stubs: &'a StubTable,
    /// Qualified names of every function in the module.
    pub functions: BTreeSet<String>,
    /// Class qualname → names of its methods.
    pub methods: BTreeMap<String, BTreeSet<String>>,
    /// Class qualname → attributes assigned through `self` in `__init__`.
    pub init_attrs: BTreeMap<String, BTreeSet<String>>,
    /// Simple class name → qualname, for classes defined in the module.
    pub local_classes: BTreeMap<String, String>,
}

impl<'a> BuildCtx<'a> {
    pub fn new(module: &ModuleAst, users: &'a UserTypeSet, stubs: &'a StubTable) -> Self {
        let functions = module.functions.iter().map(|f| f.qualname.clone()).collect();
        let mut methods = BTreeMap::new();
        let mut local_classes = BTreeMap::new();
        for c in &module.classes {
            methods.insert(c.qualname.clone(), c.methods.iter().cloned().collect());
            local_classes.entry(c.name.clone()).or_insert_with(|| c.qualname.clone());
        }
        let mut init_attrs: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for f in &module.functions {
            if let (Some(cls), Some(recv)) = (&f.class_name, f.receiver()) {
                if f.name == "__init__" {
                    let mut attrs = BTreeSet::new();
                    self_attr_writes(&f.body, recv, &mut attrs);
                    init_attrs.insert(cls.clone(), attrs);
                }
            }
        }
        BuildCtx {
            users,
            stubs,
            functions,
            methods,
            init_attrs,
            local_classes,
        }
    }

    fn user_type(&self, name: &str) -> Option<PyType> {
        let entry = self.users.resolve(name)?;
        Some(if self.users.overloads(entry) {
            PyType::user_overloading(entry)
        } else {
            PyType::user(entry)
        })
    }
}

fn self_attr_writes(body: &[Stmt], recv: &str, out: &mut BTreeSet<String>) {
    for s in body {
        match &s.kind {
            StmtKind::Assign { targets, .. } => {
                for t in targets {
                    self_attr_target(t, recv, out);
                }
            }
            StmtKind::AnnAssign { target, value: Some(_), .. }
            | StmtKind::AugAssign { target, .. } => self_attr_target(target, recv, out),
            _ => {}
        }
        for b in child_blocks(s) {
            self_attr_writes(b, recv, out);
        }
    }
}

fn self_attr_target(t: &Expr, recv: &str, out: &mut BTreeSet<String>) {
    match &t.kind {
        ExprKind::Attribute { value, attr } if value.as_name() == Some(recv) => {
            out.insert(attr.clone());
        }
        ExprKind::Tuple(es) | ExprKind::List(es) => {
            for e in es {
                self_attr_target(e, recv, out);
            }
        }
        _ => {}
    }
}

/// Nested statement blocks of a compound statement (not nested scopes).
fn child_blocks(s: &Stmt) -> Vec<&[Stmt]> {
    match &s.kind {
        StmtKind::If { body, orelse, .. }
        | StmtKind::For { body, orelse, .. }
        | StmtKind::While { body, orelse, .. } => vec![body, orelse],
        StmtKind::With { body, .. } => vec![body],
        StmtKind::Try {
            body,
            handlers,
            orelse,
            finalbody,
        } => {
            let mut v: Vec<&[Stmt]> = vec![body, orelse, finalbody];
            v.extend(handlers.iter().map(|h| h.body.as_slice()));
            v
        }
        _ => vec![],
    }
}

// ---- local-variable analysis -----------------------------------------------

fn target_names(t: &Expr, out: &mut BTreeSet<String>) {
    match &t.kind {
        ExprKind::Name(n) => {
            out.insert(n.clone());
        }
        ExprKind::Tuple(es) | ExprKind::List(es) => {
            for e in es {
                target_names(e, out);
            }
        }
        ExprKind::Starred(e) => target_names(e, out),
        _ => {}
    }
}

fn expr_bindings(e: &Expr, out: &mut BTreeSet<String>) {
    match &e.kind {
        ExprKind::Lambda { .. } => return,
        ExprKind::NamedExpr { target, .. } => target_names(target, out),
        ExprKind::ListComp { generators, .. }
        | ExprKind::SetComp { generators, .. }
        | ExprKind::GeneratorExp { generators, .. }
        | ExprKind::DictComp { generators, .. } => {
            for g in generators {
                target_names(&g.target, out);
            }
        }
        _ => {}
    }
    for c in e.children() {
        expr_bindings(c, out);
    }
}

/// Names bound by statements of `body`, and names declared global/nonlocal.
fn bindings(body: &[Stmt], bound: &mut BTreeSet<String>, declared: &mut BTreeSet<String>) {
    for s in body {
        match &s.kind {
            StmtKind::Assign { targets, value } => {
                targets.iter().for_each(|t| target_names(t, bound));
                targets.iter().for_each(|t| expr_bindings(t, bound));
                expr_bindings(value, bound);
            }
            StmtKind::AugAssign { target, value, .. } => {
                target_names(target, bound);
                expr_bindings(value, bound);
            }
            StmtKind::AnnAssign { target, value, .. } => {
                target_names(target, bound);
                if let Some(v) = value {
                    expr_bindings(v, bound);
                }
            }
            StmtKind::For { target, iter, .. } => {
                target_names(target, bound);
                expr_bindings(iter, bound);
            }
            StmtKind::With { items, .. } => {
                for it in items {
                    expr_bindings(&it.context, bound);
                    if let Some(t) = &it.target {
                        target_names(t, bound);
                    }
                }
            }
            StmtKind::Try { handlers, .. } => {
                for h in handlers {
                    if let Some(n) = &h.name {
                        bound.insert(n.clone());
                    }
                }
            }
            StmtKind::Delete(ts) => ts.iter().for_each(|t| target_names(t, bound)),
            StmtKind::Global(ns) | StmtKind::Nonlocal(ns) => declared.extend(ns.iter().cloned()),
            StmtKind::Expr(e) | StmtKind::Return(Some(e)) => expr_bindings(e, bound),
            StmtKind::If { test, .. } | StmtKind::While { test, .. } => expr_bindings(test, bound),
            StmtKind::Assert { test, msg } => {
                expr_bindings(test, bound);
                if let Some(m) = msg {
                    expr_bindings(m, bound);
                }
            }
            _ => {}
        }
        for b in child_blocks(s) {
            bindings(b, bound, declared);
        }
    }
}

/// The class instantiated by `name = C(...)` when `C` is a class of the module.
fn instantiation<'s>(s: &'s Stmt, local_classes: &BTreeMap<String, String>) -> Option<(&'s str, String)> {
    let StmtKind::Assign { targets, value } = &s.kind else {
        return None;
    };
    let [target] = targets.as_slice() else { return None };
    let name = target.as_name()?;
    let ExprKind::Call { func, .. } = &value.kind else {
        return None;
    };
    let cls = local_classes.get(func.as_name()?)?;
    Some((name, cls.clone()))
}

/// Locals whose every binding instantiates one class of the module, mapped to
/// that class. Attribute reads through them take what `__init__` assigned.
fn instance_vars(func: &FunctionAst, local_classes: &BTreeMap<String, String>) -> BTreeMap<String, String> {
    fn walk(
        body: &[Stmt],
        local_classes: &BTreeMap<String, String>,
        inst: &mut BTreeMap<String, Option<String>>,
        other: &mut BTreeSet<String>,
    ) {
        let mut declared = BTreeSet::new();
        for s in body {
            if let Some((name, cls)) = instantiation(s, local_classes) {
                let e = inst.entry(name.to_string()).or_insert_with(|| Some(cls.clone()));
                if e.as_deref() != Some(cls.as_str()) {
                    *e = None;
                }
                if let StmtKind::Assign { value, .. } = &s.kind {
                    expr_bindings(value, other);
                }
                continue;
            }
            let children = child_blocks(s);
            if children.is_empty() {
                bindings(std::slice::from_ref(s), other, &mut declared);
                continue;
            }
            match &s.kind {
                StmtKind::For { target, iter, .. } => {
                    target_names(target, other);
                    expr_bindings(iter, other);
                }
                StmtKind::With { items, .. } => {
                    for it in items {
                        expr_bindings(&it.context, other);
                        if let Some(t) = &it.target {
                            target_names(t, other);
                        }
                    }
                }
                StmtKind::Try { handlers, .. } => {
                    other.extend(handlers.iter().filter_map(|h| h.name.clone()));
                }
                StmtKind::If { test, .. } | StmtKind::While { test, .. } => expr_bindings(test, other),
                _ => {}
            }
            for b in children {
                walk(b, local_classes, inst, other);
            }
        }
        other.extend(declared);
    }
    let mut inst = BTreeMap::new();
    let mut other: BTreeSet<String> = func.params.iter().map(|p| p.name.clone()).collect();
    walk(&func.body, local_classes, &mut inst, &mut other);
    inst.into_iter()
        .filter(|(n, _)| !other.contains(n))
        .filter_map(|(n, c)| Some((n, c?)))
        .collect()
}

/// Variables a loop body may redefine, including containers it mutates.
fn loop_writes(body: &[Stmt], out: &mut BTreeSet<String>) {
    let mut declared = BTreeSet::new();
    bindings(body, out, &mut declared);
    mutated(body, out);
}

fn mutated(body: &[Stmt], out: &mut BTreeSet<String>) {
    fn in_expr(e: &Expr, out: &mut BTreeSet<String>) {
        if let ExprKind::Lambda { .. } = e.kind {
            return;
        }
        if let ExprKind::Call { func, .. } = &e.kind {
            if let ExprKind::Attribute { value, attr } = &func.kind {
                if let (Some(n), Some(_)) = (value.as_name(), MutateKind::from_method(attr)) {
                    out.insert(n.to_string());
                }
            }
        }
        for c in e.children() {
            in_expr(c, out);
        }
    }
    fn in_target(t: &Expr, out: &mut BTreeSet<String>) {
        match &t.kind {
            ExprKind::Subscript { value, .. } => {
                if let Some(n) = value.as_name() {
                    out.insert(n.to_string());
                }
            }
            ExprKind::Tuple(es) | ExprKind::List(es) => es.iter().for_each(|e| in_target(e, out)),
            _ => {}
        }
    }
    for s in body {
        match &s.kind {
            StmtKind::Assign { targets, value } => {
                targets.iter().for_each(|t| in_target(t, out));
                in_expr(value, out);
            }
            StmtKind::AugAssign { target, value, .. } => {
                in_target(target, out);
                in_expr(value, out);
            }
            StmtKind::Expr(e) | StmtKind::Return(Some(e)) => in_expr(e, out),
            StmtKind::AnnAssign { value: Some(v), .. } => in_expr(v, out),
            StmtKind::If { test, .. } | StmtKind::While { test, .. } => in_expr(test, out),
            StmtKind::For { iter, .. } => in_expr(iter, out),
            _ => {}
        }
        for b in child_blocks(s) {
            mutated(b, out);
        }
    }
}

fn is_true_const(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::Constant(Constant::Bool(true)))
        || matches!(&e.kind, ExprKind::Constant(Constant::Int(i)) if i != "0")
}

fn has_break(body: &[Stmt]) -> bool {
    body.iter().any(|s| match &s.kind {
        StmtKind::Break => true,
        StmtKind::If { body, orelse, .. } => has_break(body) || has_break(orelse),
        StmtKind::With { body, .. } => has_break(body),
        StmtKind::Try {
            body,
            handlers,
            orelse,
            finalbody,
        } => {
            has_break(body)
                || has_break(orelse)
                || has_break(finalbody)
                || handlers.iter().any(|h| has_break(&h.body))
        }
        _ => false,
    })
}

/// True when control cannot fall off the end of `body`.
pub(crate) fn terminates(body: &[Stmt]) -> bool {
    body.iter().any(|s| match &s.kind {
        StmtKind::Return(_) | StmtKind::Raise { .. } => true,
        StmtKind::If { body, orelse, .. } => terminates(body) && terminates(orelse),
        StmtKind::While { test, body, .. } => is_true_const(test) && !has_break(body),
        StmtKind::With { body, .. } => terminates(body),
        StmtKind::Try {
            body,
            handlers,
            finalbody,
            ..
        } => terminates(finalbody) || (terminates(body) && handlers.iter().all(|h| terminates(&h.body))),
        _ => false,
    })
}

fn has_bare_return(body: &[Stmt]) -> bool {
    body.iter().any(|s| match &s.kind {
        StmtKind::Return(None) => true,
        _ => child_blocks(s).into_iter().any(has_bare_return),
    })
}

fn literal_index(e: &Expr) -> Option<i64> {
    match &e.kind {
        ExprKind::Constant(Constant::Int(s)) => parse_int(s),
        ExprKind::UnaryOp {
            op: UnaryOp::USub,
            operand,
        } => match &operand.kind {
            ExprKind::Constant(Constant::Int(s)) => parse_int(s).map(|i| -i),
            _ => None,
        },
        _ => None,
    }
}

fn parse_int(s: &str) -> Option<i64> {
    let s = s.replace('_', "");
    let lower = s.to_ascii_lowercase();
    if let Some(h) = lower.strip_prefix("0x") {
        i64::from_str_radix(h, 16).ok()
    } else if let Some(o) = lower.strip_prefix("0o") {
        i64::from_str_radix(o, 8).ok()
    } else if let Some(b) = lower.strip_prefix("0b") {
        i64::from_str_radix(b, 2).ok()
    } else {
        lower.parse().ok()
    }
}

fn builtin_class(name: &str) -> Option<PyType> {
    Some(match name {
        "int" => PyType::INT,
        "float" => PyType::FLOAT,
        "str" => PyType::STR,
        "bool" => PyType::BOOL,
        "bytes" => PyType::BYTES,
        "list" => PyType::bare(Ctor::List),
        "tuple" => PyType::bare(Ctor::Tuple),
        "dict" => PyType::bare(Ctor::Dict),
        "set" => PyType::bare(Ctor::Set),
        "type" => PyType::TypeType,
        _ => return None,
    })
}

// ---- the builder -----------------------------------------------------------

type Env = BTreeMap<String, Edge>;

struct Builder<'a, 'c> {
    ctx: &'a BuildCtx<'c>,
    func: &'a FunctionAst,
    receiver: Option<&'a str>,
    nodes: Vec<TdgNode>,
    env: Env,
    counters: BTreeMap<String, usize>,
    locals: BTreeSet<String>,
    returns: Vec<Edge>,
    yields: Vec<Edge>,
    is_generator: bool,
    calls: Vec<PendingCall>,
    attr_defs: BTreeMap<String, Edge>,
    attr_uses: Vec<(NodeId, String)>,
    instances: BTreeMap<String, String>,
}

/// Builds the graph of one function. Calls into other functions of the
/// module are recorded as pending and wired by [`super::link_functions`].
pub fn build_tdg(func: &FunctionAst, ctx: &BuildCtx) -> Tdg {
    let mut bound = BTreeSet::new();
    let mut declared = BTreeSet::new();
    bindings(&func.body, &mut bound, &mut declared);
    let mut locals: BTreeSet<String> = func.params.iter().map(|p| p.name.clone()).collect();
    locals.extend(bound);
    for d in &declared {
        locals.remove(d);
    }
    let mut b = Builder {
        ctx,
        func,
        receiver: func.receiver(),
        nodes: Vec::new(),
        env: Env::new(),
        counters: BTreeMap::new(),
        locals,
        returns: Vec::new(),
        yields: Vec::new(),
        is_generator: contains_yield(&func.body),
        calls: Vec::new(),
        attr_defs: BTreeMap::new(),
        attr_uses: Vec::new(),
        instances: instance_vars(func, &ctx.local_classes),
    };
    let (params, param_names) = b.params();
    b.block(&func.body);
    let return_slot = b.return_slot();
    Tdg {
        function: func.qualname.clone(),
        class_name: func.class_name.clone(),
        nodes: b.nodes,
        params,
        param_names,
        has_receiver: b.receiver.is_some(),
        return_slot,
        calls: b.calls,
        attr_defs: if func.name == "__init__" { b.attr_defs } else { BTreeMap::new() },
        attr_uses: b.attr_uses,
    }
}

fn contains_yield(body: &[Stmt]) -> bool {
    fn in_expr(e: &Expr) -> bool {
        match &e.kind {
            ExprKind::Yield(_) | ExprKind::YieldFrom(_) => true,
            ExprKind::Lambda { .. } => false,
            _ => e.children().into_iter().any(in_expr),
        }
    }
    body.iter().any(|s| {
        let here = match &s.kind {
            StmtKind::Expr(e) | StmtKind::Return(Some(e)) => in_expr(e),
            StmtKind::Assign { value, .. } => in_expr(value),
            StmtKind::AugAssign { value, .. } => in_expr(value),
            StmtKind::AnnAssign { value: Some(v), .. } => in_expr(v),
            _ => false,
        };
        here || child_blocks(s).into_iter().any(contains_yield)
    })
}

impl Builder<'_, '_> {
    fn add(&mut self, id_prefix: &str, kind: NodeKind, inputs: Vec<Edge>, line: u32) -> NodeId {
        let idx = self.nodes.len();
        let id = match &kind {
            NodeKind::Symbol { .. } => id_prefix.to_string(),
            _ => format!("{id_prefix}{idx}"),
        };
        self.nodes.push(TdgNode {
            id,
            kind,
            inputs,
            line,
        });
        idx
    }

    fn expr_node(&mut self, op: Op, inputs: Vec<Edge>, line: u32) -> Edge {
        Edge::out(self.add("e", NodeKind::Expr(op), inputs, line))
    }

    fn constant(&mut self, t: PyType, line: u32) -> Edge {
        self.expr_node(Op::Const(t), vec![], line)
    }

    fn opaque(&mut self, line: u32) -> Edge {
        self.expr_node(Op::Opaque, vec![], line)
    }

    fn symbol(&mut self, name: &str, role: Role, seed: Option<PyType>, inputs: Vec<Edge>, line: u32) -> NodeId {
        let order = {
            let c = self.counters.entry(name.to_string()).or_insert(0);
            let o = *c;
            *c += 1;
            o
        };
        let id = format!("{}({line})", symbol_key(name, order));
        self.add(
            &id,
            NodeKind::Symbol {
                name: name.to_string(),
                order,
                role,
                seed,
            },
            inputs,
            line,
        )
    }

    fn params(&mut self) -> (Vec<NodeId>, Vec<String>) {
        let mut ids = Vec::new();
        let mut names = Vec::new();
        let receiver = self.receiver.map(str::to_string);
        let is_classmethod = self
            .func
            .decorators
            .iter()
            .any(|d| d.dotted_name().as_deref() == Some("classmethod"));
        for (i, p) in self.func.params.iter().enumerate() {
            let mut inputs = Vec::new();
            if let Some(d) = &p.default {
                inputs.push(self.expr(d));
            }
            let seed = if i == 0 && receiver.as_deref() == Some(p.name.as_str()) {
                if is_classmethod {
                    Some(PyType::TypeType)
                } else {
                    let cls = self.func.class_name.as_deref().unwrap_or_default();
                    let simple = cls.rsplit('.').next().unwrap_or(cls);
                    Some(self.ctx.user_type(simple).unwrap_or_else(|| PyType::user(simple)))
                }
            } else {
                None
            };
            let id = self.symbol(&p.name, Role::Param(i), seed, inputs, p.span.line);
            self.env.insert(p.name.clone(), Edge::out(id));
            ids.push(id);
            names.push(p.name.clone());
        }
        (ids, names)
    }

    fn return_slot(&mut self) -> NodeId {
        let line = self.func.span.line;
        let mut inputs = std::mem::take(&mut self.returns);
        let mut seed = None;
        if self.is_generator {
            let yields = std::mem::take(&mut self.yields);
            inputs = vec![self.expr_node(Op::GenReturn, yields, line)];
        } else if !terminates(&self.func.body) || has_bare_return(&self.func.body) {
            seed = Some(PyType::NoneType);
        }
        self.symbol("return", Role::Return, seed, inputs, line)
    }

    // ---- variables ----

    fn read(&mut self, name: &str, line: u32) -> Edge {
        if !self.locals.contains(name) {
            return self.global_ref(name, line);
        }
        let inputs = self.env.get(name).copied().into_iter().collect();
        let id = self.symbol(name, Role::Local, None, inputs, line);
        self.env.insert(name.to_string(), Edge::out(id));
        Edge::out(id)
    }

    fn write(&mut self, name: &str, value: Edge, line: u32) {
        if !self.locals.contains(name) {
            return;
        }
        let id = self.symbol(name, Role::Local, None, vec![value], line);
        self.env.insert(name.to_string(), Edge::out(id));
    }

    fn global_ref(&mut self, name: &str, line: u32) -> Edge {
        if builtin_class(name).is_some() || self.ctx.users.contains(name) {
            return self.constant(PyType::TypeType, line);
        }
        if self.resolve_function(name).is_some() {
            return self.constant(PyType::bare(Ctor::Callable), line);
        }
        if let Some(sig) = crate::rules::lookup_stub(name, self.ctx.stubs) {
            return self.constant(sig.clone(), line);
        }
        self.opaque(line)
    }

    /// In-file function a bare name refers to, innermost scope first.
    fn resolve_function(&self, name: &str) -> Option<String> {
        let q = &self.func.qualname;
        let mut scope = Some(q.as_str());
        while let Some(s) = scope {
            let cand = format!("{s}.{name}");
            if self.ctx.functions.contains(&cand) {
                return Some(cand);
            }
            scope = s.rsplit_once('.').map(|(p, _)| p).filter(|p| self.ctx.functions.contains(*p));
        }
        if self.ctx.functions.contains(name) {
            return Some(name.to_string());
        }
        None
    }

    // ---- assignment targets ----

    fn assign(&mut self, target: &Expr, value: Edge) {
        let line = target.span.line;
        match &target.kind {
            ExprKind::Name(n) => self.write(n, value, line),
            ExprKind::Tuple(es) | ExprKind::List(es) => {
                let star = es.iter().position(|e| matches!(e.kind, ExprKind::Starred(_)));
                let arity = es.len();
                for (index, e) in es.iter().enumerate() {
                    let u = self.expr_node(Op::Unpack { index, arity, star }, vec![value], e.span.line);
                    let inner = match &e.kind {
                        ExprKind::Starred(x) => x,
                        _ => e,
                    };
                    self.assign(inner, u);
                }
            }
            ExprKind::Starred(e) => self.assign(e, value),
            ExprKind::Attribute { value: base, attr } => {
                let is_self = self.receiver.is_some() && base.as_name() == self.receiver;
                self.expr(base);
                if is_self {
                    self.attr_defs.insert(attr.clone(), value);
                }
            }
            ExprKind::Subscript { value: base, slice } => {
                let local_base = base.as_name().filter(|n| self.locals.contains(*n)).map(str::to_string);
                let b = self.expr(base);
                let k = self.expr(slice);
                if let Some(n) = local_base {
                    let m = self.expr_node(Op::Mutate(MutateKind::SetItem), vec![b, k, value], line);
                    self.env.insert(n, m);
                }
            }
            _ => {
                self.expr(target);
            }
        }
    }

    // ---- statements ----

    fn block(&mut self, body: &[Stmt]) {
        for s in body {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        let line = s.span.line;
        match &s.kind {
            StmtKind::Expr(e) => {
                if !matches!(e.kind, ExprKind::Constant(_)) {
                    self.expr(e);
                }
            }
            StmtKind::Assign { targets, value } => {
                let v = self.expr(value);
                for t in targets {
                    self.assign(t, v);
                }
            }
            StmtKind::AnnAssign { target, value, .. } => {
                if let Some(v) = value {
                    let v = self.expr(v);
                    self.assign(target, v);
                }
            }
            StmtKind::AugAssign { target, op, value } => self.aug_assign(target, *op, value),
            StmtKind::Return(v) => {
                let e = match v {
                    Some(v) => self.expr(v),
                    None => self.constant(PyType::NoneType, line),
                };
                if !self.is_generator {
                    self.returns.push(e);
                }
            }
            StmtKind::If { test, body, orelse } => self.if_stmt(test, body, orelse),
            StmtKind::While { test, body, orelse } => {
                let heads = self.loop_heads(body, Some(test), None, line);
                self.expr(test);
                self.block(body);
                self.close_loop(heads);
                self.block(orelse);
            }
            StmtKind::For {
                target,
                iter,
                body,
                orelse,
                ..
            } => {
                let it = self.expr(iter);
                let heads = self.loop_heads(body, None, Some(target), line);
                let elem = self.expr_node(Op::Iterate, vec![it], line);
                self.assign(target, elem);
                self.block(body);
                self.close_loop(heads);
                self.block(orelse);
            }
            StmtKind::With { items, body, .. } => {
                for it in items {
                    self.expr(&it.context);
                    if let Some(t) = &it.target {
                        let o = self.opaque(line);
                        self.assign(t, o);
                    }
                }
                self.block(body);
            }
            StmtKind::Try {
                body,
                handlers,
                orelse,
                finalbody,
            } => {
                self.block(body);
                for h in handlers {
                    if let Some(t) = &h.typ {
                        self.expr(t);
                    }
                    if let Some(n) = &h.name {
                        let o = self.opaque(h.span.line);
                        self.write(n, o, h.span.line);
                    }
                    self.block(&h.body);
                }
                self.block(orelse);
                self.block(finalbody);
            }
            StmtKind::Raise { exc, cause } => {
                for e in [exc, cause].into_iter().flatten() {
                    self.expr(e);
                }
            }
            StmtKind::Assert { test, msg } => {
                self.expr(test);
                if let Some(m) = msg {
                    self.expr(m);
                }
            }
            StmtKind::Delete(ts) => {
                for t in ts {
                    self.expr(t);
                }
            }
            StmtKind::FunctionDef(_)
            | StmtKind::ClassDef(_)
            | StmtKind::Import(_)
            | StmtKind::ImportFrom { .. }
            | StmtKind::Pass
            | StmtKind::Break
            | StmtKind::Continue
            | StmtKind::Global(_)
            | StmtKind::Nonlocal(_)
            | StmtKind::Opaque(_) => {}
        }
    }

    fn aug_assign(&mut self, target: &Expr, op: BinOp, value: &Expr) {
        let line = target.span.line;
        match &target.kind {
            ExprKind::Name(n) => {
                let cur = self.read(n, line);
                let v = self.expr(value);
                let r = self.expr_node(Op::Bin(op), vec![cur, v], line);
                self.write(n, r, line);
            }
            ExprKind::Subscript { value: base, slice } => {
                let local_base = base.as_name().filter(|n| self.locals.contains(*n)).map(str::to_string);
                let b = self.expr(base);
                let k = self.expr(slice);
                let cur = self.expr_node(Op::Subscript { const_index: literal_index(slice) }, vec![b, k], line);
                let v = self.expr(value);
                let r = self.expr_node(Op::Bin(op), vec![cur, v], line);
                if let Some(n) = local_base {
                    let m = self.expr_node(Op::Mutate(MutateKind::SetItem), vec![b, k, r], line);
                    self.env.insert(n, m);
                }
            }
            ExprKind::Attribute { value: base, attr } => {
                let is_self = self.receiver.is_some() && base.as_name() == self.receiver;
                let cur = self.attribute(base, attr, line);
                let v = self.expr(value);
                let r = self.expr_node(Op::Bin(op), vec![cur, v], line);
                if is_self {
                    self.attr_defs.insert(attr.clone(), r);
                }
            }
            _ => {
                self.expr(target);
                self.expr(value);
            }
        }
    }

    /// Guard types of `isinstance(<local>, T)`, if `test` has that shape.
    fn isinstance_guard<'e>(&self, test: &'e Expr) -> Option<(&'e str, u32, BTreeSet<PyType>)> {
        let ExprKind::Call { func, args, keywords } = &test.kind else {
            return None;
        };
        if func.as_name() != Some("isinstance") || args.len() != 2 || !keywords.is_empty() {
            return None;
        }
        if self.locals.contains("isinstance") {
            return None;
        }
        let var = args[0].as_name().filter(|n| self.locals.contains(*n))?;
        let classes: Vec<&Expr> = match &args[1].kind {
            ExprKind::Tuple(es) => es.iter().collect(),
            _ => vec![&args[1]],
        };
        let mut guard = BTreeSet::new();
        for c in classes {
            let name = c.dotted_name()?;
            if self.locals.contains(&name) {
                return None;
            }
            let t = builtin_class(&name)
                .filter(|t| *t != PyType::TypeType)
                .or_else(|| self.ctx.user_type(&name))?;
            guard.insert(t);
        }
        Some((var, args[0].span.line, guard))
    }

    fn if_stmt(&mut self, test: &Expr, body: &[Stmt], orelse: &[Stmt]) {
        let line = test.span.line;
        let guard = self.isinstance_guard(test);
        let branch = match guard {
            Some((var, vline, g)) => {
                let r = self.read(var, vline);
                let b = self.add(
                    "branch",
                    NodeKind::Branch {
                        var: var.to_string(),
                        guard: g,
                    },
                    vec![r],
                    line,
                );
                Some((var.to_string(), b))
            }
            None => {
                self.expr(test);
                None
            }
        };
        let before = self.env.clone();
        if let Some((v, b)) = &branch {
            self.env.insert(v.clone(), Edge { from: *b, port: Port::True });
        }
        self.block(body);
        let after_true = std::mem::replace(&mut self.env, before);
        if let Some((v, b)) = &branch {
            self.env.insert(v.clone(), Edge { from: *b, port: Port::False });
        }
        self.block(orelse);
        let after_false = std::mem::take(&mut self.env);
        let live: Vec<Env> = [(after_true, terminates(body)), (after_false, terminates(orelse))]
            .into_iter()
            .filter(|(_, t)| !t)
            .map(|(e, _)| e)
            .collect();
        self.env = self.join(live, line);
    }

    fn join(&mut self, envs: Vec<Env>, line: u32) -> Env {
        match envs.len() {
            0 => return Env::new(),
            1 => return envs.into_iter().next().unwrap(),
            _ => {}
        }
        let names: BTreeSet<String> = envs.iter().flat_map(|e| e.keys().cloned()).collect();
        let mut out = Env::new();
        for n in names {
            let mut defs: Vec<Edge> = Vec::new();
            for e in &envs {
                if let Some(d) = e.get(&n) {
                    if !defs.contains(d) {
                        defs.push(*d);
                    }
                }
            }
            let d = if defs.len() == 1 {
                defs[0]
            } else {
                Edge::out(self.add("merge", NodeKind::Merge { strict: true }, defs, line))
            };
            out.insert(n, d);
        }
        out
    }

    fn loop_heads(&mut self, body: &[Stmt], test: Option<&Expr>, target: Option<&Expr>, line: u32) -> Vec<(String, NodeId)> {
        let mut written = BTreeSet::new();
        loop_writes(body, &mut written);
        if let Some(t) = target {
            target_names(t, &mut written);
        }
        if let Some(t) = test {
            expr_bindings(t, &mut written);
        }
        let mut heads = Vec::new();
        for n in written {
            if let Some(&def) = self.env.get(&n) {
                let m = self.add("merge", NodeKind::Merge { strict: false }, vec![def], line);
                self.env.insert(n.clone(), Edge::out(m));
                heads.push((n, m));
            }
        }
        heads
    }

    fn close_loop(&mut self, heads: Vec<(String, NodeId)>) {
        for (n, m) in heads {
            if let Some(&end) = self.env.get(&n) {
                if end != Edge::out(m) && !self.nodes[m].inputs.contains(&end) {
                    self.nodes[m].inputs.push(end);
                }
            }
            self.env.insert(n, Edge::out(m));
        }
    }

    // ---- expressions ----

    fn exprs(&mut self, es: &[Expr]) -> Vec<Edge> {
        es.iter().map(|e| self.expr(e)).collect()
    }

    fn expr(&mut self, e: &Expr) -> Edge {
        let line = e.span.line;
        match &e.kind {
            ExprKind::Name(n) => self.read(n, line),
            ExprKind::Constant(c) => {
                let t = match c {
                    Constant::Int(_) => PyType::INT,
                    Constant::Float(_) => PyType::FLOAT,
                    Constant::Str(_) => PyType::STR,
                    Constant::Bytes(_) => PyType::BYTES,
                    Constant::Bool(_) => PyType::BOOL,
                    Constant::None => PyType::NoneType,
                    Constant::Complex(_) | Constant::Ellipsis => return self.opaque(line),
                };
                self.constant(t, line)
            }
            ExprKind::JoinedStr(values) => {
                self.exprs(values);
                self.constant(PyType::STR, line)
            }
            ExprKind::BoolOp { values, .. } => {
                let ins = self.exprs(values);
                self.expr_node(Op::BoolOp, ins, line)
            }
            ExprKind::BinOp { left, op, right } => {
                let l = self.expr(left);
                let r = self.expr(right);
                self.expr_node(Op::Bin(*op), vec![l, r], line)
            }
            ExprKind::UnaryOp { op, operand } => {
                let a = self.expr(operand);
                self.expr_node(Op::Unary(*op), vec![a], line)
            }
            ExprKind::Compare { left, ops, comparators } => {
                let mut ins = vec![self.expr(left)];
                ins.extend(self.exprs(comparators));
                self.expr_node(Op::Compare(ops.clone()), ins, line)
            }
            ExprKind::Call { func, args, keywords } => self.call(func, args, keywords, line),
            ExprKind::Attribute { value, attr } => self.attribute(value, attr, line),
            ExprKind::Subscript { value, slice } => {
                let v = self.expr(value);
                if let ExprKind::Slice { lower, upper, step } = &slice.kind {
                    for p in [lower, upper, step].into_iter().flatten() {
                        self.expr(p);
                    }
                    return self.expr_node(Op::SliceOf, vec![v], line);
                }
                let k = self.expr(slice);
                self.expr_node(Op::Subscript { const_index: literal_index(slice) }, vec![v, k], line)
            }
            ExprKind::Slice { lower, upper, step } => {
                for p in [lower, upper, step].into_iter().flatten() {
                    self.expr(p);
                }
                self.opaque(line)
            }
            ExprKind::Tuple(es) | ExprKind::List(es) | ExprKind::Set(es) => {
                let starred = es.iter().any(|x| matches!(x.kind, ExprKind::Starred(_)));
                let ins = self.exprs(es);
                if starred {
                    return self.opaque(line);
                }
                let op = match &e.kind {
                    ExprKind::Tuple(_) => Op::TupleLit,
                    ExprKind::List(_) => Op::ListLit,
                    _ => Op::SetLit,
                };
                self.expr_node(op, ins, line)
            }
            ExprKind::Dict { keys, values } => {
                let mut ins = Vec::new();
                let mut splat = false;
                for (k, v) in keys.iter().zip(values) {
                    match k {
                        Some(k) => {
                            ins.push(self.expr(k));
                            ins.push(self.expr(v));
                        }
                        None => {
                            self.expr(v);
                            splat = true;
                        }
                    }
                }
                if splat {
                    return self.opaque(line);
                }
                self.expr_node(Op::DictLit, ins, line)
            }
            ExprKind::ListComp { elt, generators } => {
                self.comprehension(generators);
                let x = self.expr(elt);
                self.expr_node(Op::ListComp, vec![x], line)
            }
            ExprKind::SetComp { elt, generators } => {
                self.comprehension(generators);
                let x = self.expr(elt);
                self.expr_node(Op::SetComp, vec![x], line)
            }
            ExprKind::GeneratorExp { elt, generators } => {
                self.comprehension(generators);
                let x = self.expr(elt);
                self.expr_node(Op::GenExp, vec![x], line)
            }
            ExprKind::DictComp { key, value, generators } => {
                self.comprehension(generators);
                let k = self.expr(key);
                let v = self.expr(value);
                self.expr_node(Op::DictComp, vec![k, v], line)
            }
            ExprKind::Lambda { .. } => self.constant(PyType::bare(Ctor::Callable), line),
            ExprKind::IfExp { test, body, orelse } => {
                let guard = self.isinstance_guard(test);
                let before_branch = match guard {
                    Some((var, vline, g)) => {
                        let r = self.read(var, vline);
                        let b = self.add(
                            "branch",
                            NodeKind::Branch { var: var.to_string(), guard: g },
                            vec![r],
                            line,
                        );
                        Some((var.to_string(), b))
                    }
                    None => {
                        self.expr(test);
                        None
                    }
                };
                let before = self.env.clone();
                if let Some((v, b)) = &before_branch {
                    self.env.insert(v.clone(), Edge { from: *b, port: Port::True });
                }
                let t = self.expr(body);
                let after_true = std::mem::replace(&mut self.env, before);
                if let Some((v, b)) = &before_branch {
                    self.env.insert(v.clone(), Edge { from: *b, port: Port::False });
                }
                let f = self.expr(orelse);
                let after_false = std::mem::take(&mut self.env);
                self.env = self.join(vec![after_true, after_false], line);
                self.expr_node(Op::IfExp, vec![t, f], line)
            }
            ExprKind::Starred(x) | ExprKind::Await(x) => {
                self.expr(x);
                self.opaque(line)
            }
            ExprKind::Yield(x) => {
                if let Some(x) = x {
                    let v = self.expr(x);
                    self.yields.push(v);
                } else {
                    let v = self.constant(PyType::NoneType, line);
                    self.yields.push(v);
                }
                self.opaque(line)
            }
            ExprKind::YieldFrom(x) => {
                let v = self.expr(x);
                let el = self.expr_node(Op::Iterate, vec![v], line);
                self.yields.push(el);
                self.opaque(line)
            }
            ExprKind::NamedExpr { target, value } => {
                let v = self.expr(value);
                let n = self.expr_node(Op::NamedExpr, vec![v], line);
                self.assign(target, n);
                n
            }
        }
    }

    fn comprehension(&mut self, generators: &[Comprehension]) {
        for g in generators {
            let it = self.expr(&g.iter);
            let el = self.expr_node(Op::Iterate, vec![it], g.iter.span.line);
            self.assign(&g.target, el);
            for cond in &g.ifs {
                self.expr(cond);
            }
        }
    }

    fn attribute(&mut self, value: &Expr, attr: &str, line: u32) -> Edge {
        let base_name = value.as_name();
        // Module attribute such as `os.sep`.
        if let Some(n) = base_name {
            if !self.locals.contains(n) && self.ctx.users.module_prefixes.contains(n) {
                return self.opaque(line);
            }
        }
        let is_self = self.receiver.is_some() && base_name == self.receiver;
        let instance_of = base_name.and_then(|n| self.instances.get(n)).cloned();
        let recv = self.expr(value);
        if let Some(cls) = instance_of {
            if self.ctx.init_attrs.get(&cls).is_some_and(|a| a.contains(attr)) {
                let n = self.add("e", NodeKind::Expr(Op::NamedExpr), vec![], line);
                self.attr_uses.push((n, format!("{cls}.{attr}")));
                return Edge::out(n);
            }
        }
        if is_self {
            if self.func.name == "__init__" {
                if let Some(&d) = self.attr_defs.get(attr) {
                    return self.expr_node(Op::NamedExpr, vec![d], line);
                }
            } else if let Some(cls) = &self.func.class_name {
                if self.ctx.init_attrs.get(cls).is_some_and(|a| a.contains(attr)) {
                    let n = self.add("e", NodeKind::Expr(Op::NamedExpr), vec![], line);
                    self.attr_uses.push((n, format!("{cls}.{attr}")));
                    return Edge::out(n);
                }
            }
        }
        self.expr_node(Op::Attribute(attr.to_string()), vec![recv], line)
    }

    fn call(&mut self, func: &Expr, args: &[Expr], keywords: &[Keyword], line: u32) -> Edge {
        let starred = args.iter().any(|a| matches!(a.kind, ExprKind::Starred(_)));
        match &func.kind {
            ExprKind::Name(n) if !self.locals.contains(n) => {
                if let Some(q) = self.resolve_function(n) {
                    let ins = self.exprs(args);
                    let kws = self.keywords(keywords);
                    let node = self.add("e", NodeKind::Expr(Op::LinkedCall(q.clone())), vec![], line);
                    if !starred {
                        self.calls.push(PendingCall {
                            node,
                            callee: q,
                            args: ins,
                            keywords: kws,
                            bound: false,
                            uses_return: true,
                        });
                    }
                    return Edge::out(node);
                }
                if let Some(t) = self.ctx.user_type(n) {
                    let ins = self.exprs(args);
                    let kws = self.keywords(keywords);
                    let c = self.constant(t, line);
                    let init = self
                        .ctx
                        .local_classes
                        .get(n)
                        .map(|q| format!("{q}.__init__"))
                        .filter(|q| self.ctx.functions.contains(q));
                    if let (Some(init), false) = (init, starred) {
                        self.calls.push(PendingCall {
                            node: c.from,
                            callee: init,
                            args: ins,
                            keywords: kws,
                            bound: true,
                            uses_return: false,
                        });
                    }
                    return c;
                }
                if self.ctx.stubs.entries.contains_key(n.as_str()) {
                    return self.stub_call(n, args, keywords, line);
                }
                self.exprs(args);
                self.keywords(keywords);
                self.opaque(line)
            }
            ExprKind::Attribute { value, attr } => {
                if let Some(dotted) = func.dotted_name() {
                    let base = dotted.split('.').next().unwrap_or_default();
                    if !self.locals.contains(base) && self.ctx.stubs.entries.contains_key(dotted.as_str()) {
                        return self.stub_call(&dotted, args, keywords, line);
                    }
                    if !self.locals.contains(base) && self.ctx.users.module_prefixes.contains(base) {
                        self.exprs(args);
                        self.keywords(keywords);
                        return self.opaque(line);
                    }
                }
                let base_name = value.as_name();
                let is_self = self.receiver.is_some() && base_name == self.receiver;
                if is_self {
                    if let Some(cls) = self.func.class_name.clone() {
                        if self.ctx.methods.get(&cls).is_some_and(|m| m.contains(attr)) {
                            let q = format!("{cls}.{attr}");
                            if self.ctx.functions.contains(&q) {
                                self.expr(value);
                                let ins = self.exprs(args);
                                let kws = self.keywords(keywords);
                                let node = self.add("e", NodeKind::Expr(Op::LinkedCall(q.clone())), vec![], line);
                                if !starred {
                                    self.calls.push(PendingCall {
                                        node,
                                        callee: q,
                                        args: ins,
                                        keywords: kws,
                                        bound: true,
                                        uses_return: true,
                                    });
                                }
                                return Edge::out(node);
                            }
                        }
                    }
                }
                if let (Some(n), Some(kind)) = (base_name, MutateKind::from_method(attr)) {
                    if self.locals.contains(n) && !starred && keywords.is_empty() {
                        let recv = self.read(n, value.span.line);
                        let mut ins = vec![recv];
                        ins.extend(self.exprs(args));
                        let m = self.expr_node(Op::Mutate(kind), ins, line);
                        self.env.insert(n.to_string(), m);
                        return self.opaque(line);
                    }
                }
                let recv = self.expr(value);
                let mut ins = vec![recv];
                ins.extend(self.exprs(args));
                self.keywords(keywords);
                if starred {
                    return self.opaque(line);
                }
                self.expr_node(Op::MethodCall(attr.clone()), ins, line)
            }
            _ => {
                let callee = self.expr(func);
                let mut ins = vec![callee];
                ins.extend(self.exprs(args));
                self.keywords(keywords);
                if starred {
                    return self.opaque(line);
                }
                self.expr_node(Op::CallValue, ins, line)
            }
        }
    }

    fn stub_call(&mut self, name: &str, args: &[Expr], keywords: &[Keyword], line: u32) -> Edge {
        let starred = args.iter().any(|a| matches!(a.kind, ExprKind::Starred(_)));
        let ins = self.exprs(args);
        self.keywords(keywords);
        if starred {
            return self.opaque(line);
        }
        self.expr_node(Op::StubCall(name.to_string()), ins, line)
    }

    fn keywords(&mut self, keywords: &[Keyword]) -> Vec<(String, Edge)> {
        let mut out = Vec::new();
        for k in keywords {
            let v = self.expr(&k.value);
            if let Some(a) = &k.arg {
                out.push((a.clone(), v));
            }
        }
        out
    }
}
