//! Shared setup for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use pytdg::eval::{exact_match, predictions_for, record_key};
use pytdg::frontend::{collect_user_types, parse_module, strip_annotations, UserTypeSet};
use pytdg::recommend::{FileRecommender, LexicalEmbedding, NullRecommender, Recommender};
use pytdg::rules::{Op, RuleCtx, StubTable};
use pytdg::solver::{Engine, InferenceConfig, InferenceResult};
use pytdg::tdg::{build_program, NodeKind, ProgramTdg};
use pytdg::types::parse_type_lenient;

pub mod dominators;
pub mod rejection;
pub mod typegen;

pub const SHAPE: &str = include_str!("../fixtures/shape.py");
pub const SHAPE_STUBS: &str = include_str!("../fixtures/shape.stubs");
pub const STATIC_CORPUS: &str = include_str!("../fixtures/static_corpus.py");
pub const STATIC_MANIFEST: &str = include_str!("../fixtures/static_corpus.manifest");

pub fn shape_stubs() -> StubTable {
    let mut t = StubTable::builtin();
    t.load_str(SHAPE_STUBS, "shape.stubs").unwrap();
    t
}

pub struct Setup {
    pub stubs: StubTable,
    pub users: UserTypeSet,
    pub program: ProgramTdg,
}

pub fn setup(src: &str, stubs: StubTable) -> Setup {
    let m = parse_module(src, "t.py").unwrap();
    let users = collect_user_types(&m, &[]);
    let program = build_program(&m, &users, &stubs);
    Setup { stubs, users, program }
}

pub fn infer(s: &Setup, rec: &dyn Recommender) -> (InferenceResult, Vec<String>) {
    let engine = Engine {
        ctx: RuleCtx {
            stubs: &s.stubs,
            users: &s.users,
        },
        recommender: rec,
        embedding: &LexicalEmbedding,
        bpe: None,
        config: InferenceConfig::default(),
    };
    let solved = engine.infer(&s.program, "t.py").unwrap();
    let violations = solved.solver.replay_violations();
    (solved.functions, violations)
}

pub fn file_rec(pairs: &[(&str, &[&str])]) -> FileRecommender {
    FileRecommender::new(
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
            .collect::<BTreeMap<_, _>>(),
    )
}

/// Every operator of the rule set, named independently of its parameters.
/// Matching exhaustively makes a new operator fail to compile here until the
/// corpus covers it.
pub fn op_kind(op: &Op) -> &'static str {
    match op {
        Op::Const(_) => "const",
        Op::Opaque => "opaque",
        Op::BoolOp => "boolop",
        Op::IfExp => "ifexp",
        Op::Bin(_) => "bin",
        Op::Unary(_) => "unary",
        Op::Compare(_) => "compare",
        Op::Subscript { .. } => "subscript",
        Op::SliceOf => "slice",
        Op::Attribute(_) => "attribute",
        Op::MethodCall(_) => "method",
        Op::StubCall(_) => "stubcall",
        Op::CallValue => "callvalue",
        Op::LinkedCall(_) => "linkedcall",
        Op::Iterate => "iterate",
        Op::Unpack { .. } => "unpack",
        Op::TupleLit => "tuple",
        Op::ListLit => "list",
        Op::SetLit => "set",
        Op::DictLit => "dict",
        Op::ListComp => "listcomp",
        Op::SetComp => "setcomp",
        Op::GenExp => "genexp",
        Op::DictComp => "dictcomp",
        Op::Mutate(_) => "mutate",
        Op::NamedExpr => "namedexpr",
        Op::GenReturn => "genreturn",
    }
}

/// Node kinds that carry a typing rule; `opaque` is the absence of one.
pub const RULE_KINDS: [&str; 29] = [
    "branch", "merge", "loopmerge",
    "const", "boolop", "ifexp", "bin", "unary", "compare", "subscript", "slice", "attribute", "method",
    "stubcall", "callvalue", "linkedcall", "iterate", "unpack", "tuple", "list", "set", "dict", "listcomp",
    "setcomp", "genexp", "dictcomp", "mutate", "namedexpr", "genreturn",
];

pub struct CorpusOutcome {
    pub functions: usize,
    pub forced: usize,
    pub exact: usize,
    pub wrong: Vec<String>,
    pub violations: Vec<String>,
    pub uncovered: Vec<&'static str>,
    /// Annotated slots outside the manifest that came out typed.
    pub unforced_typed: Vec<String>,
}

/// Strips the static corpus, infers with no recommender, and scores the
/// slots the manifest marks as statically forced.
pub fn run_static_corpus() -> CorpusOutcome {
    let (stripped, truths) = strip_annotations(STATIC_CORPUS).unwrap();
    let s = setup(&stripped, StubTable::builtin());
    let (results, violations) = infer(&s, &NullRecommender);
    let preds = predictions_for(&results, &truths);
    let forced: BTreeSet<&str> = STATIC_MANIFEST
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let mut exact = 0;
    let mut wrong = Vec::new();
    let mut unforced_typed = Vec::new();
    let mut seen = BTreeSet::new();
    for r in &truths {
        let key = record_key(r);
        let got = preds.get(&key).and_then(|c| c.first());
        if !forced.contains(key.as_str()) {
            if got.is_some() {
                unforced_typed.push(key);
            }
            continue;
        }
        seen.insert(key.clone());
        let ok = got.is_some_and(|g| exact_match(&parse_type_lenient(g), &parse_type_lenient(&r.annotation)));
        if ok {
            exact += 1;
        } else {
            wrong.push(format!("{key}: want {} got {got:?}", r.annotation));
        }
    }
    for k in &forced {
        if !seen.contains(*k) {
            wrong.push(format!("{k}: in manifest but not annotated"));
        }
    }
    let used: BTreeSet<&str> = s
        .program
        .nodes
        .iter()
        .filter_map(|n| match &n.kind {
            NodeKind::Expr(op) => Some(op_kind(op)),
            NodeKind::Branch { .. } => Some("branch"),
            NodeKind::Merge { strict: true } => Some("merge"),
            NodeKind::Merge { strict: false } => Some("loopmerge"),
            NodeKind::Symbol { .. } => None,
        })
        .collect();
    let functions: BTreeSet<&str> = forced.iter().filter_map(|k| k.split(':').next()).collect();
    CorpusOutcome {
        functions: functions.len(),
        forced: forced.len(),
        exact,
        wrong,
        violations,
        uncovered: RULE_KINDS.iter().copied().filter(|k| !used.contains(k)).collect(),
        unforced_typed,
    }
}
