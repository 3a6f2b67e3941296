//! Random straight-line programs and an exhaustive consistency oracle for
//! checking that rejection only removes types no consistent typing uses.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pytdg::rules::{point_image, RuleCtx, StubTable};
use pytdg::solver::Solver;
use pytdg::tdg::{NodeId, NodeKind, Role};
use pytdg::types::{parse_type_expr, PyType};

use super::setup;

const POOL: [&str; 13] = [
    "int", "float", "str", "bool", "None", "bytes", "List[int]", "List[str]", "Set[int]", "Dict[str, int]",
    "Dict[str, List[int]]", "Tuple[int, str]", "Tuple[str]",
];

const BINARY: [&str; 17] = [
    "+", "-", "*", "/", "//", "%", "**", "<<", "&", "|", "^", "<", ">=", "==", "in", "not in", "is",
];

const UNARY: [&str; 3] = ["-", "~", "not "];

const METHODS: [&str; 5] = ["upper()", "split()", "keys()", "count(0)", "index(0)"];

const CALLS: [&str; 5] = ["len", "str", "abs", "sorted", "int"];

pub struct Case {
    pub source: String,
    /// Parameter name to its recommended candidates.
    pub recs: BTreeMap<String, Vec<String>>,
    pub slots: usize,
}

/// A function of 1 to 3 parameters and a few locals, each local one
/// pointwise operation over earlier variables; at most 8 slots in all.
pub fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let nparams = rng.gen_range(1..=3);
    let params: Vec<String> = (0..nparams).map(|i| format!("p{i}")).collect();
    let mut recs = BTreeMap::new();
    for p in &params {
        let k = rng.gen_range(1..=4);
        let mut c: Vec<String> = POOL.choose_multiple(rng, k).map(|s| s.to_string()).collect();
        c.sort();
        recs.insert(p.clone(), c);
    }
    // Slots: parameters, one per local, and the return.
    let nlocals = rng.gen_range(1..=(8 - nparams - 1));
    let mut vars = params.clone();
    let mut body = String::new();
    for i in 0..nlocals {
        let a = vars.choose(rng).unwrap().clone();
        let b = vars.choose(rng).unwrap().clone();
        let expr = match rng.gen_range(0..10) {
            0..=3 => format!("{a} {} {b}", BINARY.choose(rng).unwrap()),
            4 => format!("{}{a}", UNARY.choose(rng).unwrap()),
            5 => format!("{a}[0]"),
            6 => format!("{a}[1:]"),
            7 => format!("{a}[{b}]"),
            8 => format!("{}({a})", CALLS.choose(rng).unwrap()),
            _ => format!("{a}.{}", METHODS.choose(rng).unwrap()),
        };
        let v = format!("v{i}");
        body.push_str(&format!("    {v} = {expr}\n"));
        vars.push(v);
    }
    body.push_str(&format!("    return {}\n", vars.last().unwrap()));
    Case {
        source: format!("def f({}):\n{body}", params.join(", ")),
        recs,
        slots: nparams + nlocals + 1,
    }
}

/// A type, or a wildcard for values the rules cannot determine.
type Val = Option<PyType>;

struct Oracle<'a> {
    solver: &'a Solver<'a>,
    ctx: RuleCtx<'a>,
    order: Vec<NodeId>,
    domains: Vec<Vec<Val>>,
    chosen: Vec<Val>,
    witnessed: BTreeSet<(NodeId, PyType)>,
    consistent: usize,
}

impl Oracle<'_> {
    fn candidates(&self, n: NodeId) -> Vec<Val> {
        let node = &self.solver.program.nodes[n];
        let ins: Vec<&Val> = node.inputs.iter().map(|e| &self.chosen[e.from]).collect();
        match &node.kind {
            NodeKind::Symbol { .. } if node.inputs.is_empty() => self.domains[n].clone(),
            NodeKind::Symbol { .. } | NodeKind::Merge { .. } | NodeKind::Branch { .. } => {
                ins.into_iter().cloned().collect::<BTreeSet<Val>>().into_iter().collect()
            }
            NodeKind::Expr(op) => {
                if ins.iter().any(|v| v.is_none()) {
                    return vec![None];
                }
                let args: Vec<&PyType> = ins.iter().map(|v| v.as_ref().unwrap()).collect();
                // Constants have no point rule; their forward value is exact.
                match point_image(op, &args, &self.ctx) {
                    None => self.domains[n].clone(),
                    Some(img) => img.into_iter().map(Some).collect(),
                }
            }
        }
    }

    fn search(&mut self, i: usize) {
        if i == self.order.len() {
            self.consistent += 1;
            for (n, v) in self.chosen.iter().enumerate() {
                if let Some(t) = v {
                    self.witnessed.insert((n, t.clone()));
                }
            }
            return;
        }
        let n = self.order[i];
        for v in self.candidates(n) {
            self.chosen[n] = v;
            self.search(i + 1);
        }
        self.chosen[n] = None;
    }
}

pub struct Outcome {
    pub banned: usize,
    pub consistent_assignments: usize,
    pub unsound: Vec<String>,
}

/// Solves one random case with its recommendations installed and checks
/// every rejected (node, type) pair against all consistent typings.
pub fn check_case(case: &Case) -> Outcome {
    let s = setup(&case.source, StubTable::builtin());
    let mut solver = Solver::new(
        &s.program,
        RuleCtx {
            stubs: &s.stubs,
            users: &s.users,
        },
    );
    for (n, node) in s.program.nodes.iter().enumerate() {
        if let NodeKind::Symbol {
            name,
            role: Role::Param(_),
            ..
        } = &node.kind
        {
            let set = case.recs[name].iter().map(|t| parse_type_expr(t).unwrap().normalized()).collect();
            solver.recommended.insert(n, set);
        }
    }
    solver.run_fixpoint().expect("fixpoint");

    let mut open = Solver::new(
        &s.program,
        RuleCtx {
            stubs: &s.stubs,
            users: &s.users,
        },
    );
    open.recommended = case
        .recs
        .iter()
        .flat_map(|(name, ts)| {
            let n = s
                .program
                .nodes
                .iter()
                .position(|x| matches!(&x.kind, NodeKind::Symbol { name: m, role: Role::Param(_), .. } if m == name))
                .unwrap();
            Some((n, ts.iter().map(|t| parse_type_expr(t).unwrap().normalized()).collect()))
        })
        .collect();
    open.forward_pass().expect("forward");

    // Straight-line code: node ids are already in dependency order.
    let order: Vec<NodeId> = (0..s.program.nodes.len()).collect();
    for (i, node) in s.program.nodes.iter().enumerate() {
        assert!(node.inputs.iter().all(|e| e.from < i), "not topological: {}", case.source);
    }
    let domains = open
        .values
        .iter()
        .map(|c| {
            if c.is_blank() {
                vec![None]
            } else {
                c.types.iter().cloned().map(Some).collect()
            }
        })
        .collect();
    let mut oracle = Oracle {
        solver: &open,
        ctx: RuleCtx {
            stubs: &s.stubs,
            users: &s.users,
        },
        order,
        domains,
        chosen: vec![None; s.program.nodes.len()],
        witnessed: BTreeSet::new(),
        consistent: 0,
    };
    oracle.search(0);

    let mut unsound = Vec::new();
    let mut banned = 0;
    for (n, bans) in solver.bans.iter().enumerate() {
        for t in bans {
            banned += 1;
            if oracle.witnessed.contains(&(n, t.clone())) {
                unsound.push(format!("{} banned {t} but a consistent typing uses it", s.program.nodes[n].id));
            }
        }
    }
    Outcome {
        banned,
        consistent_assignments: oracle.consistent,
        unsound,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
