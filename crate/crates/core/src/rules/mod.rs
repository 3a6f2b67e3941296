//! Type rules attached to expression nodes.
//!
//! Every rule is defined by a point function over single types. Forward
//! inference lifts it over the cartesian product of the input candidate sets;
//! backward rejection removes each candidate that has no partner combination
//! for which the point function yields a type.

pub mod members;
pub mod stubs;

use std::collections::BTreeSet;

use crate::frontend::ast::{BinOp, CmpOp, UnaryOp};
use crate::frontend::UserTypeSet;
use crate::types::{
    absorb, element_type, more_precise, value_type, Atom, CandidateSet, Ctor, Elem, PyType,
    SlotState, ValidTypeSpec, DEPTH_CAP,
};

pub use members::{builtin_name, members_of};
pub use stubs::{apply_stub, lookup_stub, StubError, StubTable};

/// Larger input products are not enumerated; the result stays blank.
pub const MAX_PRODUCT: usize = 4096;

/// Result of a point function. `Unknown` means the rule cannot decide (an
/// open attribute set, a missing stub); an empty set means a type error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Point {
    Types(BTreeSet<PyType>),
    Unknown,
}

impl Point {
    fn one(t: PyType) -> Point {
        Point::Types([t].into())
    }

    fn none() -> Point {
        Point::Types(BTreeSet::new())
    }

    fn of(types: impl IntoIterator<Item = PyType>) -> Point {
        Point::Types(types.into_iter().collect())
    }

    /// False only for a definite type error.
    pub fn is_viable(&self) -> bool {
        match self {
            Point::Types(s) => !s.is_empty(),
            Point::Unknown => true,
        }
    }
}

pub struct RuleCtx<'a> {
    pub stubs: &'a StubTable,
    pub users: &'a UserTypeSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MutateKind {
    Append,
    Extend,
    Insert,
    Add,
    SetItem,
    Update,
}

impl MutateKind {
    pub fn from_method(name: &str) -> Option<MutateKind> {
        Some(match name {
            "append" => MutateKind::Append,
            "extend" => MutateKind::Extend,
            "insert" => MutateKind::Insert,
            "add" => MutateKind::Add,
            "update" => MutateKind::Update,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Op {
    /// Literal, class reference, lambda or instantiation.
    Const(PyType),
    /// Something the rules do not model; always blank.
    Opaque,
    BoolOp,
    /// Inputs are the two arms; the test is not an input.
    IfExp,
    Bin(BinOp),
    Unary(UnaryOp),
    /// A comparison chain; inputs are the `ops.len() + 1` operands.
    Compare(Vec<CmpOp>),
    /// Inputs: value, index.
    Subscript { const_index: Option<i64> },
    /// Input: value.
    SliceOf,
    /// Input: receiver.
    Attribute(String),
    /// Inputs: receiver, positional arguments.
    MethodCall(String),
    /// Inputs: positional arguments.
    StubCall(String),
    /// Inputs: callee value, positional arguments.
    CallValue,
    /// Input: the callee's return slot.
    LinkedCall(String),
    /// Element of the iterated value.
    Iterate,
    /// Component `index` of an `arity`-way destructuring.
    Unpack {
        index: usize,
        arity: usize,
        star: Option<usize>,
    },
    TupleLit,
    ListLit,
    SetLit,
    /// Inputs alternate key, value.
    DictLit,
    ListComp,
    SetComp,
    GenExp,
    /// Inputs: key, value.
    DictComp,
    /// Input 0 is the container before the call, the rest are arguments.
    Mutate(MutateKind),
    NamedExpr,
    /// Collects yielded values into the generator a function returns.
    GenReturn,
}

impl Op {
    /// Pointwise rules are lifted over the input product and support
    /// rejection; the others aggregate their inputs.
    pub fn is_pointwise(&self) -> bool {
        matches!(
            self,
            Op::Bin(_)
                | Op::Unary(_)
                | Op::Compare(_)
                | Op::Subscript { .. }
                | Op::SliceOf
                | Op::Attribute(_)
                | Op::MethodCall(_)
                | Op::StubCall(_)
                | Op::CallValue
                | Op::Iterate
                | Op::Unpack { .. }
                | Op::TupleLit
                | Op::NamedExpr
        )
    }

    pub fn label(&self) -> String {
        match self {
            Op::Const(t) => format!("const {t}"),
            Op::Opaque => "opaque".into(),
            Op::BoolOp => "boolop".into(),
            Op::IfExp => "ifexp".into(),
            Op::Bin(b) => b.symbol().into(),
            Op::Unary(u) => match u {
                UnaryOp::Not => "not".into(),
                UnaryOp::Invert => "~".into(),
                UnaryOp::UAdd => "+x".into(),
                UnaryOp::USub => "-x".into(),
            },
            Op::Compare(ops) => {
                let names: Vec<&str> = ops.iter().map(|o| cmp_symbol(*o)).collect();
                format!("compare {}", names.join(" "))
            }
            Op::Subscript { const_index: Some(i) } => format!("[{i}]"),
            Op::Subscript { const_index: None } => "[]".into(),
            Op::SliceOf => "[:]".into(),
            Op::Attribute(a) => format!(".{a}"),
            Op::MethodCall(m) => format!(".{m}()"),
            Op::StubCall(n) => format!("{n}()"),
            Op::CallValue => "call".into(),
            Op::LinkedCall(q) => format!("call {q}"),
            Op::Iterate => "iter".into(),
            Op::Unpack { index, arity, .. } => format!("unpack {index}/{arity}"),
            Op::TupleLit => "tuple".into(),
            Op::ListLit => "list".into(),
            Op::SetLit => "set".into(),
            Op::DictLit => "dict".into(),
            Op::ListComp => "listcomp".into(),
            Op::SetComp => "setcomp".into(),
            Op::GenExp => "genexp".into(),
            Op::DictComp => "dictcomp".into(),
            Op::Mutate(k) => format!("mutate {k:?}").to_lowercase(),
            Op::NamedExpr => ":=".into(),
            Op::GenReturn => "generator".into(),
        }
    }
}

fn cmp_symbol(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "==",
        CmpOp::NotEq => "!=",
        CmpOp::Lt => "<",
        CmpOp::LtE => "<=",
        CmpOp::Gt => ">",
        CmpOp::GtE => ">=",
        CmpOp::Is => "is",
        CmpOp::IsNot => "is not",
        CmpOp::In => "in",
        CmpOp::NotIn => "not in",
    }
}

// ---- forward ---------------------------------------------------------------

fn finish(types: impl IntoIterator<Item = PyType>) -> CandidateSet {
    let set: BTreeSet<PyType> = types
        .into_iter()
        .map(|t| t.capped(DEPTH_CAP).normalized())
        .collect();
    if set.is_empty() {
        return CandidateSet::blank();
    }
    CandidateSet::inferred(set)
}

pub fn product_size(inputs: &[&CandidateSet]) -> usize {
    inputs
        .iter()
        .try_fold(1usize, |acc, c| acc.checked_mul(c.len()))
        .unwrap_or(usize::MAX)
}

/// Calls `f` on every combination of one type per input, stopping when it
/// returns false.
pub fn for_each_combo(inputs: &[&[PyType]], mut f: impl FnMut(&[&PyType]) -> bool) {
    if inputs.iter().any(|s| s.is_empty()) {
        return;
    }
    let mut idx = vec![0usize; inputs.len()];
    let mut combo: Vec<&PyType> = inputs.iter().map(|s| &s[0]).collect();
    loop {
        if !f(&combo) {
            return;
        }
        let mut k = inputs.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < inputs[k].len() {
                combo[k] = &inputs[k][idx[k]];
                break;
            }
            idx[k] = 0;
            combo[k] = &inputs[k][0];
        }
    }
}

/// Forward transfer of `op`. Any blank input makes the result blank.
pub fn forward_apply(op: &Op, inputs: &[&CandidateSet], ctx: &RuleCtx) -> CandidateSet {
    match op {
        Op::Const(t) => return CandidateSet::inferred([t.clone()]),
        Op::Opaque => return CandidateSet::blank(),
        _ => {}
    }
    if inputs.iter().any(|c| c.is_blank()) {
        return CandidateSet::blank();
    }
    if op.is_pointwise() {
        let nullary_ok = matches!(op, Op::TupleLit | Op::StubCall(_));
        if product_size(inputs) > MAX_PRODUCT || (inputs.is_empty() && !nullary_ok) {
            return CandidateSet::blank();
        }
        let lists: Vec<Vec<PyType>> = inputs.iter().map(|c| c.types.iter().cloned().collect()).collect();
        let slices: Vec<&[PyType]> = lists.iter().map(Vec::as_slice).collect();
        let mut out = BTreeSet::new();
        let mut unknown = false;
        for_each_combo(&slices, |combo| match point(op, combo, ctx) {
            Point::Types(s) => {
                out.extend(s);
                true
            }
            Point::Unknown => {
                unknown = true;
                false
            }
        });
        if unknown {
            return CandidateSet::blank();
        }
        return finish(out);
    }
    let all = |range: std::ops::RangeFrom<usize>| -> Vec<PyType> {
        inputs[range.start.min(inputs.len())..]
            .iter()
            .flat_map(|c| c.types.iter().cloned())
            .collect()
    };
    match op {
        Op::BoolOp | Op::IfExp | Op::LinkedCall(_) => {
            if inputs.is_empty() {
                CandidateSet::blank()
            } else {
                finish(all(0..))
            }
        }
        Op::ListLit | Op::ListComp => finish([PyType::generic(Ctor::List, all(0..))]),
        Op::SetLit | Op::SetComp => finish([PyType::generic(Ctor::Set, all(0..))]),
        Op::GenExp | Op::GenReturn => finish([PyType::generic(Ctor::Generator, all(0..))]),
        Op::DictLit | Op::DictComp => {
            let mut pairs = BTreeSet::new();
            for kv in inputs.chunks(2) {
                if let [k, v] = kv {
                    add_pairs(&mut pairs, &k.types, &v.types);
                }
            }
            finish([dict_of(pairs)])
        }
        Op::Mutate(kind) => {
            let args = &inputs[1..];
            let out: BTreeSet<PyType> = inputs[0]
                .types
                .iter()
                .flat_map(|c| mutate_point(*kind, c, args))
                .collect();
            finish(out)
        }
        _ => unreachable!("pointwise ops handled above"),
    }
}

fn add_pairs(pairs: &mut BTreeSet<(PyType, PyType)>, keys: &BTreeSet<PyType>, vals: &BTreeSet<PyType>) {
    for k in keys {
        for v in vals {
            pairs.insert((k.clone(), v.clone()));
        }
    }
}

/// `Dict[k1, v1, k2, v2, ...]` over sorted distinct pairs.
fn dict_of(pairs: BTreeSet<(PyType, PyType)>) -> PyType {
    let params = pairs.into_iter().flat_map(|(k, v)| [k, v]).collect();
    PyType::Generic(Ctor::Dict, params)
}

fn dict_pairs(t: &PyType) -> BTreeSet<(PyType, PyType)> {
    t.params()
        .chunks(2)
        .filter_map(|kv| match kv {
            [k, v] => Some((k.clone(), v.clone())),
            _ => None,
        })
        .collect()
}

/// The container after the mutation, or nothing if `c` cannot be mutated so.
fn mutate_point(kind: MutateKind, c: &PyType, args: &[&CandidateSet]) -> Option<PyType> {
    if c.is_user() {
        return Some(c.clone());
    }
    let arg_types = |i: usize| -> Vec<PyType> {
        args.get(i).map(|a| a.types.iter().cloned().collect()).unwrap_or_default()
    };
    let extend = |ctor: Ctor, extra: Vec<PyType>| -> PyType {
        let mut params = c.params().to_vec();
        params.extend(extra);
        PyType::generic(ctor, params)
    };
    match (kind, c.ctor()?) {
        (MutateKind::Append, Ctor::List) => Some(extend(Ctor::List, arg_types(0))),
        (MutateKind::Insert, Ctor::List) => Some(extend(Ctor::List, arg_types(1))),
        (MutateKind::Extend, Ctor::List) => {
            let elems = arg_types(0)
                .iter()
                .filter_map(|a| element_type(a).ok())
                .flatten()
                .collect();
            Some(extend(Ctor::List, elems))
        }
        (MutateKind::Add, Ctor::Set) => Some(extend(Ctor::Set, arg_types(0))),
        (MutateKind::SetItem, Ctor::List) => Some(extend(Ctor::List, arg_types(1))),
        (MutateKind::SetItem, Ctor::Dict) => {
            let mut pairs = dict_pairs(c);
            if let [k, v, ..] = args {
                add_pairs(&mut pairs, &k.types, &v.types);
            }
            Some(dict_of(pairs))
        }
        (MutateKind::Update, Ctor::Dict) => {
            let mut pairs = dict_pairs(c);
            for a in arg_types(0) {
                if a.ctor() == Some(Ctor::Dict) {
                    pairs.extend(dict_pairs(&a));
                }
            }
            Some(dict_of(pairs))
        }
        (MutateKind::Update, Ctor::Set) => {
            let elems = arg_types(0)
                .iter()
                .filter_map(|a| element_type(a).ok())
                .flatten()
                .collect();
            Some(extend(Ctor::Set, elems))
        }
        _ => None,
    }
}

// ---- backward --------------------------------------------------------------

/// Types an input may take at all; a superset of what the point function
/// accepts, used to prune before enumerating combinations.
pub fn entry_spec(op: &Op, input: usize) -> Option<ValidTypeSpec> {
    use Atom::*;
    let spec = match op {
        Op::Bin(BinOp::Add) => vec![AnyElementary, Ctor(crate::types::Ctor::List), Ctor(crate::types::Ctor::Tuple), AnyOverloading],
        Op::Bin(BinOp::Sub) => vec![AnyElementary, Ctor(crate::types::Ctor::Set), AnyOverloading],
        Op::Bin(BinOp::Mult) => vec![AnyElementary, Ctor(crate::types::Ctor::List), Ctor(crate::types::Ctor::Tuple), AnyOverloading],
        Op::Bin(BinOp::BitOr | BinOp::BitAnd | BinOp::BitXor) => {
            vec![AnyElementary, Ctor(crate::types::Ctor::Set), AnyOverloading]
        }
        // String formatting takes any right operand.
        Op::Bin(BinOp::Mod) if input == 1 => return None,
        Op::Bin(_) => vec![AnyElementary, AnyOverloading],
        Op::Unary(UnaryOp::Not) => return None,
        Op::Unary(_) => vec![AnyElementary, AnyOverloading],
        Op::Subscript { .. } if input == 1 => return None,
        Op::Subscript { .. } => vec![
            AnyElementary,
            Ctor(crate::types::Ctor::List),
            Ctor(crate::types::Ctor::Tuple),
            Ctor(crate::types::Ctor::Dict),
            AnyOverloading,
            Exact(PyType::TypeType),
        ],
        Op::Iterate => vec![AnyElementary, AnyGeneric, AnyOverloading, Exact(PyType::TypeType)],
        _ => return None,
    };
    Some(ValidTypeSpec::new(spec))
}

/// Candidates of each input that no combination of partners can satisfy,
/// as `(input index, type)` pairs. Only pointwise rules and the container of
/// a mutation reject; blank inputs and oversized products reject nothing.
pub fn reject_apply(op: &Op, inputs: &[&CandidateSet], ctx: &RuleCtx) -> Vec<(usize, PyType)> {
    if inputs.iter().any(|c| c.is_blank()) {
        return Vec::new();
    }
    if let Op::Mutate(kind) = op {
        return inputs[0]
            .types
            .iter()
            .filter(|c| mutate_point(*kind, c, &inputs[1..]).is_none())
            .map(|c| (0, c.clone()))
            .collect();
    }
    if !op.is_pointwise() || product_size(inputs) > MAX_PRODUCT {
        return Vec::new();
    }
    let mut removed = Vec::new();
    let mut lists: Vec<Vec<PyType>> = Vec::with_capacity(inputs.len());
    for (i, c) in inputs.iter().enumerate() {
        let spec = entry_spec(op, i);
        let (keep, drop): (Vec<PyType>, Vec<PyType>) = c
            .types
            .iter()
            .cloned()
            .partition(|t| spec.as_ref().is_none_or(|s| s.contains(t)));
        removed.extend(drop.into_iter().map(|t| (i, t)));
        lists.push(keep);
    }
    for i in 0..inputs.len() {
        let candidates = lists[i].clone();
        for u in candidates {
            let mut slices: Vec<&[PyType]> = lists.iter().map(Vec::as_slice).collect();
            let single = [u.clone()];
            slices[i] = &single;
            let mut viable = false;
            for_each_combo(&slices, |combo| {
                viable = point(op, combo, ctx).is_viable();
                !viable
            });
            if !viable {
                removed.push((i, u));
            }
        }
    }
    removed.sort();
    removed.dedup();
    removed
}

/// Types the rule yields for one input combination, normalized the way
/// forward inference stores them. `None` when the rule cannot decide.
pub fn point_image(op: &Op, args: &[&PyType], ctx: &RuleCtx) -> Option<BTreeSet<PyType>> {
    match point(op, args, ctx) {
        Point::Unknown => None,
        Point::Types(s) => Some(
            s.into_iter()
                .flat_map(|t| t.capped(DEPTH_CAP).normalized().members())
                .collect(),
        ),
    }
}

/// Convenience for callers holding plain type sets.
pub fn validated(types: impl IntoIterator<Item = PyType>) -> CandidateSet {
    CandidateSet {
        types: absorb(types.into_iter().collect()),
        state: SlotState::Validated,
    }
}

// ---- point functions -------------------------------------------------------

fn is_int_like(t: &PyType) -> bool {
    matches!(t, PyType::Elementary(Elem::Int | Elem::Bool))
}

fn is_sequence(t: &PyType) -> bool {
    matches!(t, PyType::Elementary(Elem::Str | Elem::Bytes))
        || matches!(t.ctor(), Some(Ctor::List | Ctor::Tuple))
}

fn numeric_pair(a: &PyType, b: &PyType) -> Option<PyType> {
    if a.is_numeric() && b.is_numeric() {
        more_precise(a, b).ok()
    } else {
        None
    }
}

fn join_params(c: Ctor, a: &PyType, b: &PyType) -> PyType {
    if a.is_bare() || b.is_bare() {
        return PyType::bare(c);
    }
    let mut p = a.params().to_vec();
    p.extend_from_slice(b.params());
    PyType::generic(c, p)
}

fn bin_point(op: BinOp, a: &PyType, b: &PyType) -> Point {
    for t in [a, b] {
        if t.is_overloading() {
            return Point::one(t.clone());
        }
    }
    let r = match op {
        BinOp::Add => numeric_pair(a, b).or_else(|| match (a, b) {
            (PyType::Elementary(x @ (Elem::Str | Elem::Bytes)), PyType::Elementary(y)) if x == y => {
                Some(a.clone())
            }
            (PyType::Generic(Ctor::List, _), PyType::Generic(Ctor::List, _)) => {
                Some(join_params(Ctor::List, a, b))
            }
            (PyType::Generic(Ctor::Tuple, _), PyType::Generic(Ctor::Tuple, _)) => {
                if a.is_bare() || b.is_bare() {
                    Some(PyType::bare(Ctor::Tuple))
                } else {
                    let mut p = a.params().to_vec();
                    p.extend_from_slice(b.params());
                    Some(PyType::Generic(Ctor::Tuple, p))
                }
            }
            _ => None,
        }),
        BinOp::Sub => numeric_pair(a, b).or_else(|| match (a, b) {
            (PyType::Elementary(x), PyType::Elementary(y)) if x == y => Some(a.clone()),
            (PyType::Generic(Ctor::Set, _), PyType::Generic(Ctor::Set, _)) => Some(a.clone()),
            _ => None,
        }),
        BinOp::Mult => numeric_pair(a, b).or_else(|| {
            if is_int_like(a) && is_sequence(b) {
                Some(b.clone())
            } else if is_sequence(a) && is_int_like(b) {
                Some(a.clone())
            } else {
                None
            }
        }),
        BinOp::Div => numeric_pair(a, b).map(|_| PyType::FLOAT),
        BinOp::Mod => numeric_pair(a, b).or_else(|| match a {
            PyType::Elementary(Elem::Str | Elem::Bytes) => Some(a.clone()),
            _ => None,
        }),
        BinOp::FloorDiv | BinOp::Pow => numeric_pair(a, b),
        BinOp::MatMult => None,
        BinOp::LShift | BinOp::RShift => (is_int_like(a) && is_int_like(b)).then_some(PyType::INT),
        BinOp::BitOr | BinOp::BitAnd | BinOp::BitXor => match (a, b) {
            (PyType::Elementary(Elem::Bool), PyType::Elementary(Elem::Bool)) => Some(PyType::BOOL),
            _ if is_int_like(a) && is_int_like(b) => Some(PyType::INT),
            (PyType::Generic(Ctor::Set, _), PyType::Generic(Ctor::Set, _)) => {
                Some(join_params(Ctor::Set, a, b))
            }
            _ => None,
        },
    };
    Point::of(r)
}

fn unary_point(op: UnaryOp, a: &PyType) -> Point {
    if op == UnaryOp::Not {
        return Point::one(PyType::BOOL);
    }
    if a.is_overloading() {
        return Point::one(a.clone());
    }
    Point::of(match (op, a) {
        (UnaryOp::Invert, _) if is_int_like(a) => Some(PyType::INT),
        (UnaryOp::UAdd | UnaryOp::USub, _) if is_int_like(a) => Some(PyType::INT),
        (UnaryOp::UAdd | UnaryOp::USub, PyType::Elementary(Elem::Float)) => Some(PyType::FLOAT),
        _ => None,
    })
}

fn compare_ok(op: CmpOp, a: &PyType, b: &PyType) -> bool {
    match op {
        CmpOp::Eq | CmpOp::NotEq | CmpOp::Is | CmpOp::IsNot => true,
        CmpOp::Lt | CmpOp::LtE | CmpOp::Gt | CmpOp::GtE => {
            a.is_overloading()
                || b.is_overloading()
                || (a.is_numeric() && b.is_numeric())
                || matches!((a, b), (PyType::Elementary(x), PyType::Elementary(y)) if x == y)
                || matches!(
                    (a.ctor(), b.ctor()),
                    (Some(Ctor::List), Some(Ctor::List)) | (Some(Ctor::Tuple), Some(Ctor::Tuple))
                )
        }
        CmpOp::In | CmpOp::NotIn => {
            b.is_overloading()
                || matches!(b, PyType::Elementary(Elem::Str | Elem::Bytes) | PyType::TypeType)
                || matches!(
                    b.ctor(),
                    Some(Ctor::List | Ctor::Tuple | Ctor::Set | Ctor::Dict | Ctor::Generator)
                )
        }
    }
}

/// Elements of an iterable: `Unknown` when the element type is not recorded
/// or the value is a class with its own protocol.
fn elements(t: &PyType) -> Point {
    if t.is_overloading() || *t == PyType::TypeType {
        return Point::Unknown;
    }
    match element_type(t) {
        Ok(s) if s.is_empty() => Point::Unknown,
        Ok(s) => Point::Types(s),
        Err(_) => Point::none(),
    }
}

fn subscript_point(value: &PyType, index: &PyType, const_index: Option<i64>) -> Point {
    if value.is_overloading() || *value == PyType::TypeType {
        return Point::Unknown;
    }
    if value.ctor() == Some(Ctor::Dict) {
        return match value_type(value) {
            Ok(s) if s.is_empty() => Point::Unknown,
            Ok(s) => Point::of(s.iter().flat_map(PyType::members)),
            Err(_) => Point::none(),
        };
    }
    if !is_sequence(value) {
        return Point::none();
    }
    if index.is_user() {
        return Point::Unknown;
    }
    if !is_int_like(index) {
        return Point::none();
    }
    match value {
        PyType::Generic(Ctor::Tuple, p) if !p.is_empty() => {
            let at = const_index.and_then(|i| {
                let n = p.len() as i64;
                let j = if i < 0 { n + i } else { i };
                (0..n).contains(&j).then_some(j as usize)
            });
            match at {
                Some(j) => Point::of(p[j].members()),
                None if const_index.is_some() => Point::none(),
                None => Point::of(p.iter().flat_map(PyType::members)),
            }
        }
        _ => elements(value),
    }
}

fn unpack_point(t: &PyType, index: usize, arity: usize, star: Option<usize>) -> Point {
    if let PyType::Generic(Ctor::Tuple, p) = t {
        if !p.is_empty() && star.is_none() {
            return if p.len() == arity {
                Point::of(p[index].members())
            } else {
                Point::none()
            };
        }
    }
    let elems = elements(t);
    if star == Some(index) {
        return match elems {
            Point::Types(s) if !s.is_empty() => Point::one(PyType::generic(Ctor::List, s.into_iter().collect())),
            Point::Types(_) => Point::none(),
            Point::Unknown => Point::one(PyType::bare(Ctor::List)),
        };
    }
    elems
}

fn attribute_point(recv: &PyType, name: &str) -> Point {
    match members_of(recv) {
        Some(names) if names.contains(&name) => Point::Unknown,
        Some(_) => Point::none(),
        None => Point::Unknown,
    }
}

fn method_point(name: &str, args: &[&PyType], ctx: &RuleCtx) -> Point {
    let recv = args[0];
    let Some(names) = members_of(recv) else {
        return Point::Unknown;
    };
    if !names.contains(&name) {
        return Point::none();
    }
    let Some(prefix) = builtin_name(recv) else {
        return Point::Unknown;
    };
    match lookup_stub(&format!("{prefix}.{name}"), ctx.stubs) {
        Some(sig) => apply_stub(sig, args),
        None => Point::Unknown,
    }
}

fn call_value_point(callee: &PyType) -> Point {
    match callee {
        PyType::Generic(Ctor::Callable, p) if p.len() == 2 => Point::of(p[1].members()),
        PyType::Generic(Ctor::Callable, _) | PyType::UserDefined(_) | PyType::TypeType => {
            Point::Unknown
        }
        _ => Point::none(),
    }
}

/// The point function of a pointwise rule.
pub fn point(op: &Op, args: &[&PyType], ctx: &RuleCtx) -> Point {
    match op {
        Op::Bin(b) => bin_point(*b, args[0], args[1]),
        Op::Unary(u) => unary_point(*u, args[0]),
        Op::Compare(ops) => {
            let ok = ops
                .iter()
                .enumerate()
                .all(|(i, o)| compare_ok(*o, args[i], args[i + 1]));
            if ok {
                Point::one(PyType::BOOL)
            } else {
                Point::none()
            }
        }
        Op::Subscript { const_index } => subscript_point(args[0], args[1], *const_index),
        Op::SliceOf => match args[0] {
            t if t.is_overloading() || *t == PyType::TypeType => Point::Unknown,
            PyType::Generic(Ctor::Tuple, _) => Point::one(PyType::bare(Ctor::Tuple)),
            t if is_sequence(t) => Point::one(t.clone()),
            _ => Point::none(),
        },
        Op::Attribute(name) => attribute_point(args[0], name),
        Op::MethodCall(name) => method_point(name, args, ctx),
        Op::StubCall(name) => match lookup_stub(name, ctx.stubs) {
            Some(sig) => apply_stub(sig, args),
            None => Point::Unknown,
        },
        Op::CallValue => call_value_point(args[0]),
        Op::Iterate => elements(args[0]),
        Op::Unpack { index, arity, star } => unpack_point(args[0], *index, *arity, *star),
        Op::TupleLit => Point::one(PyType::Generic(
            Ctor::Tuple,
            args.iter().map(|t| (*t).clone()).collect(),
        )),
        Op::NamedExpr => Point::one(args[0].clone()),
        _ => Point::Unknown,
    }
}
