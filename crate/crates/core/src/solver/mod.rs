//! Solving a program graph: forward inference, backward rejection, hot-slot
//! selection and the recommendation rounds.

mod hot;

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::frontend::SlotKind;
use crate::recommend::{BpeMerges, Embedding, Recommender, SlotRequest, TypeCorrector};
use crate::rules::{for_each_combo, forward_apply, point_image, product_size, reject_apply, RuleCtx, MAX_PRODUCT};
use crate::tdg::{symbol_key, Edge, NodeId, NodeKind, Port, ProgramTdg, Role};
use crate::types::{CandidateSet, PyType, SlotState};

pub use hot::{hot_slots_of_graph, semi_nca};

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceConfig {
    /// Recommendation rounds after the first static fixpoint.
    pub max_outer_iterations: usize,
    /// Candidates requested and installed per hot slot.
    pub top_k: usize,
    /// Added to name-to-type similarity when correcting user types.
    pub penalty: f64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            max_outer_iterations: 3,
            top_k: 1,
            penalty: -0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolverError {
    #[error("no fixpoint after {sweeps} sweeps over {nodes} nodes")]
    IterationOverflow { sweeps: usize, nodes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FixpointReport {
    /// Whether any candidate set differs from before the call.
    pub changed: bool,
    /// Forward/backward alternations performed.
    pub rounds: usize,
}

/// A recommendation that rejection emptied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub slot: String,
    pub kind: SlotKind,
    pub name: String,
    pub types: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotStatus {
    Static,
    Recommended,
    Blank,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct StatusMap {
    pub arguments: BTreeMap<String, SlotStatus>,
    #[serde(rename = "return")]
    pub ret: Option<SlotStatus>,
    pub locals: BTreeMap<String, SlotStatus>,
}

/// One slot of the output, kept for evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotResult {
    pub kind: SlotKind,
    pub name: String,
    /// `name` plus occurrence order for locals; the name otherwise.
    pub key: String,
    pub line: u32,
    /// Whether this local occurrence is a write.
    pub is_write: bool,
    pub types: Option<BTreeSet<PyType>>,
    pub status: SlotStatus,
}

impl SlotResult {
    pub fn rendered(&self) -> Option<String> {
        let types = self.types.as_ref()?;
        CandidateSet {
            types: types.clone(),
            state: SlotState::Inferred,
        }
        .render()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct FunctionResult {
    pub arguments: BTreeMap<String, Option<String>>,
    #[serde(rename = "return")]
    pub ret: Option<String>,
    pub locals: BTreeMap<String, Option<String>>,
    pub status: StatusMap,
    pub rejections: Vec<Rejection>,
    #[serde(skip)]
    pub slots: Vec<SlotResult>,
}

/// Qualified function name to its result.
pub type InferenceResult = BTreeMap<String, FunctionResult>;

/// Candidate sets and rejection state over one linked program.
pub struct Solver<'p> {
    pub program: &'p ProgramTdg,
    ctx: RuleCtx<'p>,
    pub values: Vec<CandidateSet>,
    /// Types rejected at each node; never re-admitted by forward inference.
    pub bans: Vec<BTreeSet<PyType>>,
    /// Installed recommendations of blank slots, pruned by rejection.
    pub recommended: BTreeMap<NodeId, BTreeSet<PyType>>,
    rpo: Vec<NodeId>,
    succ: Vec<Vec<NodeId>>,
    /// Loop heads found to depend on a blank outside their own cycle.
    forced_blank: BTreeSet<NodeId>,
}

impl<'p> Solver<'p> {
    pub fn new(program: &'p ProgramTdg, ctx: RuleCtx<'p>) -> Solver<'p> {
        let n = program.nodes.len();
        let mut succ = vec![Vec::new(); n];
        for (to, node) in program.nodes.iter().enumerate() {
            for e in &node.inputs {
                succ[e.from].push(to);
            }
        }
        for s in &mut succ {
            s.sort_unstable();
            s.dedup();
        }
        let rpo = reverse_postorder(program, &succ);
        Solver {
            program,
            ctx,
            values: vec![CandidateSet::blank(); n],
            bans: vec![BTreeSet::new(); n],
            recommended: BTreeMap::new(),
            rpo,
            succ,
            forced_blank: BTreeSet::new(),
        }
    }

    /// The value seen along `e`. A true port carries the guard types once
    /// the tested value is known; a false port passes the value through.
    pub fn port_value(&self, e: Edge) -> Cow<'_, CandidateSet> {
        let v = &self.values[e.from];
        match e.port {
            Port::Out | Port::False => Cow::Borrowed(v),
            Port::True => {
                if v.is_blank() {
                    return Cow::Owned(CandidateSet::blank());
                }
                match &self.program.nodes[e.from].kind {
                    NodeKind::Branch { guard, .. } => Cow::Owned(CandidateSet::inferred(guard.iter().cloned())),
                    _ => Cow::Borrowed(v),
                }
            }
        }
    }

    fn compute(&self, n: NodeId) -> CandidateSet {
        let node = &self.program.nodes[n];
        let inputs: Vec<Cow<CandidateSet>> = node.inputs.iter().map(|e| self.port_value(*e)).collect();
        let union_of = |ins: &[Cow<CandidateSet>]| CandidateSet::inferred(ins.iter().flat_map(|c| c.types.iter().cloned()));
        let computed = match &node.kind {
            NodeKind::Symbol { seed, .. } => {
                if let Some(rec) = self.recommended.get(&n) {
                    let mut c = CandidateSet::inferred(rec.iter().cloned());
                    c.state = SlotState::Recommended;
                    c
                } else if inputs.is_empty() {
                    match seed {
                        Some(s) => CandidateSet::inferred([s.clone()]),
                        None => CandidateSet::blank(),
                    }
                } else if inputs.iter().any(|c| c.is_blank()) {
                    CandidateSet::blank()
                } else {
                    CandidateSet::inferred(
                        inputs
                            .iter()
                            .flat_map(|c| c.types.iter().cloned())
                            .chain(seed.iter().cloned()),
                    )
                }
            }
            NodeKind::Merge { strict: true } => {
                if inputs.is_empty() || inputs.iter().any(|c| c.is_blank()) {
                    CandidateSet::blank()
                } else {
                    union_of(&inputs)
                }
            }
            NodeKind::Merge { strict: false } if self.forced_blank.contains(&n) => CandidateSet::blank(),
            NodeKind::Merge { strict: false } => {
                let known: Vec<Cow<CandidateSet>> = inputs.into_iter().filter(|c| !c.is_blank()).collect();
                if known.is_empty() {
                    CandidateSet::blank()
                } else {
                    union_of(&known)
                }
            }
            NodeKind::Branch { .. } => inputs.first().map(|c| c.as_ref().clone()).unwrap_or_default(),
            NodeKind::Expr(op) => {
                let refs: Vec<&CandidateSet> = inputs.iter().map(|c| c.as_ref()).collect();
                forward_apply(op, &refs, &self.ctx)
            }
        };
        if computed.is_blank() {
            return computed;
        }
        let bans = &self.bans[n];
        let types: BTreeSet<PyType> = computed.types.into_iter().filter(|t| !bans.contains(t)).collect();
        if types.is_empty() {
            return CandidateSet::blank();
        }
        CandidateSet {
            types,
            state: computed.state,
        }
    }

    /// Recomputes every value from scratch. Loop heads are first solved
    /// optimistically, ignoring blank back edges; a loop head that still sees
    /// a blank input depends on a genuine hole and is then forced blank, until
    /// no more loop heads are forced. Returns whether any value differs from
    /// before.
    pub fn forward_pass(&mut self) -> Result<bool, SolverError> {
        let n = self.values.len();
        let before = self.values.clone();
        self.forced_blank.clear();
        loop {
            self.sweep()?;
            let newly: Vec<NodeId> = self
                .rpo
                .iter()
                .copied()
                .filter(|&v| {
                    matches!(self.program.nodes[v].kind, NodeKind::Merge { strict: false })
                        && !self.forced_blank.contains(&v)
                        && self.program.nodes[v].inputs.iter().any(|e| self.port_value(*e).is_blank())
                })
                .collect();
            if newly.is_empty() {
                break;
            }
            self.forced_blank.extend(newly);
        }
        debug_assert_eq!(self.values.len(), n);
        Ok(before != self.values)
    }

    fn sweep(&mut self) -> Result<(), SolverError> {
        let n = self.values.len();
        self.values = vec![CandidateSet::blank(); n];
        let limit = 10 * n.max(1);
        let mut sweeps = 0;
        loop {
            sweeps += 1;
            if sweeps > limit {
                return Err(SolverError::IterationOverflow { sweeps, nodes: n });
            }
            let mut moved = false;
            for i in 0..self.rpo.len() {
                let v = self.rpo[i];
                let new = self.compute(v);
                if new != self.values[v] {
                    self.values[v] = new;
                    moved = true;
                }
            }
            if !moved {
                return Ok(());
            }
        }
    }

    /// Applies the rejection rule of every expression whose inputs are all
    /// known, from the sinks upward, and propagates each removal. Returns
    /// whether anything was removed.
    pub fn backward_pass(&mut self) -> bool {
        let mut changed = false;
        for i in (0..self.rpo.len()).rev() {
            let v = self.rpo[i];
            let node = &self.program.nodes[v];
            let NodeKind::Expr(op) = &node.kind else { continue };
            let inputs: Vec<CandidateSet> = node.inputs.iter().map(|e| self.port_value(*e).into_owned()).collect();
            if inputs.iter().any(|c| c.is_blank()) {
                continue;
            }
            let refs: Vec<&CandidateSet> = inputs.iter().collect();
            for (idx, t) in reject_apply(op, &refs, &self.ctx) {
                changed |= self.ban_edge(node.inputs[idx], t);
            }
        }
        changed
    }

    /// The node a removal along `e` propagates to, if any. Nothing flows back
    /// through a true port (its value is the guard), and a false port only
    /// passes back types the guard cannot have caught.
    fn edge_source(&self, e: Edge, t: &PyType) -> Option<NodeId> {
        match e.port {
            Port::Out => Some(e.from),
            Port::True => None,
            Port::False => match &self.program.nodes[e.from].kind {
                NodeKind::Branch { guard, .. } if guard.contains(t) => None,
                _ => Some(e.from),
            },
        }
    }

    fn ban_edge(&mut self, e: Edge, t: PyType) -> bool {
        match self.edge_source(e, &t) {
            Some(n) => self.ban(n, t),
            None => false,
        }
    }

    /// Removes `t` from node `n` for good and pushes the removal to every
    /// input that could only have produced it.
    pub fn ban(&mut self, n: NodeId, t: PyType) -> bool {
        let mut any = false;
        let mut work = vec![(n, t)];
        while let Some((n, t)) = work.pop() {
            if self.bans[n].contains(&t) || !self.values[n].types.contains(&t) {
                continue;
            }
            self.bans[n].insert(t.clone());
            self.values[n].types.remove(&t);
            if self.values[n].types.is_empty() {
                self.values[n] = CandidateSet::blank();
            }
            any = true;
            let node = &self.program.nodes[n];
            let carrying = |s: &Self, e: &Edge, t: &PyType| s.port_value(*e).types.contains(t);
            match &node.kind {
                NodeKind::Symbol { seed, .. } => {
                    if let Some(rec) = self.recommended.get_mut(&n) {
                        rec.remove(&t);
                        continue;
                    }
                    if seed.as_ref() == Some(&t) {
                        continue;
                    }
                    for e in &node.inputs {
                        if carrying(self, e, &t) {
                            if let Some(src) = self.edge_source(*e, &t) {
                                work.push((src, t.clone()));
                            }
                        }
                    }
                }
                NodeKind::Merge { .. } | NodeKind::Branch { .. } => {
                    for e in &node.inputs {
                        if carrying(self, e, &t) {
                            if let Some(src) = self.edge_source(*e, &t) {
                                work.push((src, t.clone()));
                            }
                        }
                    }
                }
                NodeKind::Expr(crate::rules::Op::IfExp | crate::rules::Op::BoolOp) => {
                    for e in &node.inputs {
                        if carrying(self, e, &t) {
                            if let Some(src) = self.edge_source(*e, &t) {
                                work.push((src, t.clone()));
                            }
                        }
                    }
                }
                NodeKind::Expr(op) if op.is_pointwise() => {
                    let inputs: Vec<CandidateSet> = node.inputs.iter().map(|e| self.port_value(*e).into_owned()).collect();
                    if inputs.is_empty() || inputs.iter().any(|c| c.is_blank()) {
                        continue;
                    }
                    let refs: Vec<&CandidateSet> = inputs.iter().collect();
                    if product_size(&refs) > MAX_PRODUCT {
                        continue;
                    }
                    let lists: Vec<Vec<PyType>> = inputs.iter().map(|c| c.types.iter().cloned().collect()).collect();
                    let banned = &self.bans[n];
                    for i in 0..lists.len() {
                        for u in &lists[i] {
                            let mut slices: Vec<&[PyType]> = lists.iter().map(Vec::as_slice).collect();
                            let single = [u.clone()];
                            slices[i] = &single;
                            let mut live = false;
                            for_each_combo(&slices, |combo| {
                                live = match point_image(op, combo, &self.ctx) {
                                    None => true,
                                    Some(img) => img.iter().any(|x| !banned.contains(x)),
                                };
                                !live
                            });
                            if !live {
                                if let Some(src) = self.edge_source(node.inputs[i], u) {
                                    work.push((src, u.clone()));
                                }
                            }
                        }
                    }
                }
                NodeKind::Expr(_) => {}
            }
        }
        any
    }

    /// Alternates forward and backward passes until neither changes anything.
    pub fn run_fixpoint(&mut self) -> Result<FixpointReport, SolverError> {
        let start_values = self.values.clone();
        let start_bans: usize = self.bans.iter().map(BTreeSet::len).sum();
        let limit = 10 * self.values.len().max(1);
        let mut rounds = 0;
        loop {
            rounds += 1;
            if rounds > limit {
                return Err(SolverError::IterationOverflow {
                    sweeps: rounds,
                    nodes: self.values.len(),
                });
            }
            let f = self.forward_pass()?;
            let b = self.backward_pass();
            if b {
                // Re-derive downstream values from the pruned inputs.
                self.forward_pass()?;
            }
            if !f && !b {
                break;
            }
        }
        let end_bans: usize = self.bans.iter().map(BTreeSet::len).sum();
        Ok(FixpointReport {
            changed: start_values != self.values || start_bans != end_bans,
            rounds,
        })
    }

    pub fn is_blank_slot(&self, n: NodeId) -> bool {
        self.program.nodes[n].is_slot() && self.values[n].is_blank()
    }

    /// Blank slots not dominated by another blank slot, in node order.
    /// Blank slots are connected when a path of blank non-slot nodes joins them.
    pub fn find_hot_slots(&self) -> Vec<NodeId> {
        let blank: Vec<NodeId> = self.program.slot_ids().filter(|&n| self.values[n].is_blank()).collect();
        let index: BTreeMap<NodeId, usize> = blank.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut edges = Vec::new();
        for (i, &s) in blank.iter().enumerate() {
            let mut seen = BTreeSet::new();
            let mut stack: Vec<NodeId> = self.succ[s].clone();
            while let Some(v) = stack.pop() {
                if !seen.insert(v) || !self.values[v].is_blank() {
                    continue;
                }
                if let Some(&j) = index.get(&v) {
                    edges.push((i, j));
                } else {
                    stack.extend(self.succ[v].iter().copied());
                }
            }
        }
        hot_slots_of_graph(blank.len(), &edges)
            .into_iter()
            .map(|i| blank[i])
            .collect()
    }

    /// Rule violations left in the current state: expressions whose value
    /// disagrees with their rule, rejections still pending, and symbols
    /// holding types none of their inputs supply. Empty at a fixpoint.
    pub fn replay_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (n, node) in self.program.nodes.iter().enumerate() {
            let inputs: Vec<CandidateSet> = node.inputs.iter().map(|e| self.port_value(*e).into_owned()).collect();
            match &node.kind {
                NodeKind::Expr(op) => {
                    if inputs.iter().any(|c| c.is_blank()) {
                        continue;
                    }
                    let refs: Vec<&CandidateSet> = inputs.iter().collect();
                    let pending = reject_apply(op, &refs, &self.ctx);
                    if !pending.is_empty() {
                        out.push(format!("{}: inputs violate {}: {pending:?}", node.id, op.label()));
                    }
                    let fwd = forward_apply(op, &refs, &self.ctx);
                    let expect: BTreeSet<PyType> =
                        fwd.types.iter().filter(|t| !self.bans[n].contains(*t)).cloned().collect();
                    if !self.values[n].is_blank() && self.values[n].types != expect {
                        out.push(format!("{}: value differs from {}", node.id, op.label()));
                    }
                }
                NodeKind::Symbol { seed, .. } if !self.recommended.contains_key(&n) => {
                    let supplied: BTreeSet<PyType> = inputs
                        .iter()
                        .flat_map(|c| c.types.iter().cloned())
                        .chain(seed.iter().cloned())
                        .flat_map(|t| t.members())
                        .collect();
                    for t in &self.values[n].types {
                        if !supplied.contains(t) && !supplied.iter().any(|s| s.is_bare() && s.ctor() == t.ctor()) {
                            out.push(format!("{}: {t} has no source", node.id));
                        }
                    }
                }
                _ => {}
            }
        }
        out
    }

    fn slot_kind(&self, n: NodeId) -> (SlotKind, String) {
        let node = &self.program.nodes[n];
        match &node.kind {
            NodeKind::Symbol { name, role, .. } => match role {
                Role::Param(_) => (SlotKind::Argument, name.clone()),
                Role::Return => (SlotKind::Return, String::new()),
                Role::Local => (SlotKind::Local, name.clone()),
            },
            _ => (SlotKind::Local, String::new()),
        }
    }

    fn request(&self, n: NodeId, file: &str, k: usize) -> SlotRequest {
        let (fi, _) = self.program.locate(n);
        let tdg = &self.program.tdgs[fi];
        let (kind, name) = self.slot_kind(n);
        let mut context: BTreeSet<String> = tdg
            .nodes
            .iter()
            .filter_map(|m| m.symbol_name())
            .filter(|s| *s != "return")
            .map(str::to_string)
            .collect();
        context.remove(&name);
        let mut ctx = vec![tdg.function.rsplit('.').next().unwrap_or(&tdg.function).to_string()];
        ctx.extend(context);
        SlotRequest {
            file: file.to_string(),
            function: tdg.function.clone(),
            kind,
            name,
            k,
            context: ctx,
        }
    }

    fn rejection(&self, n: NodeId, types: &BTreeSet<PyType>) -> Rejection {
        let (kind, name) = self.slot_kind(n);
        Rejection {
            slot: self.program.nodes[n].id.clone(),
            kind,
            name,
            types: types.iter().map(|t| t.to_string()).collect(),
        }
    }
}

fn reverse_postorder(program: &ProgramTdg, succ: &[Vec<NodeId>]) -> Vec<NodeId> {
    let n = program.nodes.len();
    let mut seen = vec![false; n];
    let mut post = Vec::with_capacity(n);
    let starts = (0..n)
        .filter(|&v| program.nodes[v].inputs.is_empty())
        .chain(0..n);
    for s in starts {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![(s, 0usize)];
        while let Some((v, i)) = stack.pop() {
            if i < succ[v].len() {
                stack.push((v, i + 1));
                let w = succ[v][i];
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                post.push(v);
            }
        }
    }
    post.reverse();
    post
}

/// Everything `infer` needs besides the program.
pub struct Engine<'a> {
    pub ctx: RuleCtx<'a>,
    pub recommender: &'a dyn Recommender,
    pub embedding: &'a dyn Embedding,
    pub bpe: Option<&'a BpeMerges>,
    pub config: InferenceConfig,
}

/// Result of solving one program, with the solver state for inspection.
pub struct Solved<'p> {
    pub solver: Solver<'p>,
    pub functions: InferenceResult,
}

impl<'a> Engine<'a> {
    /// Solves `program` statically, then runs recommendation rounds for the
    /// hot slots until none remain or the round limit is reached.
    pub fn infer<'p>(&self, program: &'p ProgramTdg, file: &str) -> Result<Solved<'p>, SolverError>
    where
        'a: 'p,
    {
        let mut s = Solver::new(
            program,
            RuleCtx {
                stubs: self.ctx.stubs,
                users: self.ctx.users,
            },
        );
        s.run_fixpoint()?;
        let valid: Vec<String> = self.ctx.users.names().map(str::to_string).collect();
        let corrector = TypeCorrector {
            valid,
            penalty: self.config.penalty,
            embedding: self.embedding,
            bpe: self.bpe,
        };
        let k = self.config.top_k.max(1);
        let mut rejected: BTreeMap<NodeId, BTreeSet<PyType>> = BTreeMap::new();
        let mut rejections: Vec<(NodeId, Rejection)> = Vec::new();

        for _ in 0..self.config.max_outer_iterations {
            let hot = s.find_hot_slots();
            if hot.is_empty() {
                break;
            }
            let reqs: Vec<SlotRequest> = hot.iter().map(|&n| s.request(n, file, k)).collect();
            let recs = self.recommender.recommend_batch(&reqs);
            let mut active: BTreeMap<NodeId, BTreeSet<PyType>> = BTreeMap::new();
            for ((&n, req), rec) in hot.iter().zip(&reqs).zip(&recs) {
                let no = rejected.get(&n);
                let types: BTreeSet<PyType> = rec
                    .candidates
                    .iter()
                    .take(k)
                    .filter(|(t, _)| !matches!(t.trim(), "Any" | "object" | "typing.Any" | ""))
                    .flat_map(|(t, _)| {
                        corrector
                            .correct(&req.name, t)
                            .with_overloading(self.ctx.users)
                            .normalized()
                            .members()
                    })
                    .filter(|t| no.is_none_or(|r| !r.contains(t)))
                    .collect();
                if !types.is_empty() {
                    active.insert(n, types);
                }
            }
            if active.is_empty() {
                break;
            }
            let snapshot = s.bans.clone();
            loop {
                for (n, types) in &active {
                    s.recommended.insert(*n, types.clone());
                }
                s.run_fixpoint()?;
                let emptied: Vec<NodeId> = active
                    .keys()
                    .copied()
                    .filter(|n| s.recommended.get(n).is_none_or(BTreeSet::is_empty))
                    .collect();
                if emptied.is_empty() {
                    break;
                }
                for n in emptied {
                    let types = active.remove(&n).unwrap_or_default();
                    rejections.push((n, s.rejection(n, &types)));
                    rejected.entry(n).or_default().extend(types);
                    s.recommended.remove(&n);
                }
                s.bans = snapshot.clone();
            }
        }
        // A slot that was rejected and never re-filled must not keep an empty
        // recommendation around.
        s.recommended.retain(|_, v| !v.is_empty());
        for (n, set) in &s.recommended {
            if !set.is_empty() && !s.values[*n].is_blank() {
                s.values[*n].state = SlotState::Validated;
            }
        }
        let functions = extract(&s, rejections);
        Ok(Solved { solver: s, functions })
    }
}

fn extract(s: &Solver, rejections: Vec<(NodeId, Rejection)>) -> InferenceResult {
    let p = s.program;
    let mut out = InferenceResult::new();
    for (fi, tdg) in p.tdgs.iter().enumerate() {
        let mut r = FunctionResult::default();
        for (local, node) in tdg.slots() {
            let g = p.global(fi, local);
            let v = &s.values[g];
            let status = if v.is_blank() {
                SlotStatus::Blank
            } else if s.recommended.contains_key(&g) {
                SlotStatus::Recommended
            } else {
                SlotStatus::Static
            };
            let rendered = if v.is_blank() { None } else { v.render() };
            let NodeKind::Symbol { name, order, role, .. } = &node.kind else { continue };
            let (kind, key) = match role {
                Role::Param(_) => {
                    r.arguments.insert(name.clone(), rendered.clone());
                    r.status.arguments.insert(name.clone(), status);
                    (SlotKind::Argument, name.clone())
                }
                Role::Return => {
                    r.ret = rendered.clone();
                    r.status.ret = Some(status);
                    (SlotKind::Return, String::new())
                }
                Role::Local => {
                    let key = symbol_key(name, *order);
                    r.locals.insert(key.clone(), rendered.clone());
                    r.status.locals.insert(key.clone(), status);
                    (SlotKind::Local, key)
                }
            };
            // A read is fed by an earlier occurrence of the same variable,
            // directly or through a merge or branch.
            let is_write = matches!(role, Role::Local)
                && node.inputs.iter().all(|e| match &tdg.nodes[e.from].kind {
                    NodeKind::Symbol { name: other, .. } => other != name,
                    NodeKind::Expr(_) => true,
                    NodeKind::Merge { .. } | NodeKind::Branch { .. } => false,
                });
            r.slots.push(SlotResult {
                kind,
                name: if matches!(role, Role::Return) { String::new() } else { name.clone() },
                key,
                line: node.line,
                is_write,
                types: (!v.is_blank()).then(|| v.types.clone()),
                status,
            });
        }
        r.rejections = rejections
            .iter()
            .filter(|(n, _)| p.locate(*n).0 == fi)
            .map(|(_, rj)| rj.clone())
            .collect();
        out.insert(tdg.function.clone(), r);
    }
    out
}
