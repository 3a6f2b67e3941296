//! Signature table for external callables.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::types::{element_type, parse_type_expr, Ctor, Elem, PyType, TypeError};

use super::Point;

const BUILTIN_STUBS: &str = include_str!("builtin_stubs.txt");

/// Prefix of the user-type name that encodes `Iterable[X]` after loading.
const ITERABLE_PREFIX: &str = "Iterable_";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StubError {
    #[error("{path}:{line}: expected `name : Callable[...]`")]
    Format { path: String, line: usize },
    #[error("{path}:{line}: {source}")]
    Type {
        path: String,
        line: usize,
        source: TypeError,
    },
    #[error("{path}:{line}: `{name}` is not a Callable")]
    NotCallable {
        path: String,
        line: usize,
        name: String,
    },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StubTable {
    pub entries: BTreeMap<String, PyType>,
}

impl StubTable {
    /// The table shipped with the engine.
    pub fn builtin() -> StubTable {
        let mut t = StubTable::default();
        t.load_str(BUILTIN_STUBS, "<builtin>")
            .expect("builtin stub table parses");
        t
    }

    /// Adds the entries of `text`, replacing existing names.
    pub fn load_str(&mut self, text: &str, path: &str) -> Result<(), StubError> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((name, sig)) = content.split_once(" : ").or_else(|| content.split_once(':'))
            else {
                return Err(StubError::Format {
                    path: path.into(),
                    line,
                });
            };
            let name = name.trim();
            if name.is_empty() {
                return Err(StubError::Format {
                    path: path.into(),
                    line,
                });
            }
            let ty = parse_type_expr(&encode_iterables(sig.trim())).map_err(|source| {
                StubError::Type {
                    path: path.into(),
                    line,
                    source,
                }
            })?;
            if !matches!(&ty, PyType::Generic(Ctor::Callable, p) if p.len() == 2) {
                return Err(StubError::NotCallable {
                    path: path.into(),
                    line,
                    name: name.into(),
                });
            }
            self.entries.insert(name.to_string(), ty);
        }
        Ok(())
    }

    pub fn load_file(&mut self, path: &Path) -> Result<(), StubError> {
        let text = std::fs::read_to_string(path).map_err(|e| StubError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        self.load_str(&text, &path.display().to_string())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn lookup_stub<'a>(name: &str, table: &'a StubTable) -> Option<&'a PyType> {
    table.entries.get(name)
}

/// Rewrites `Iterable[X]` to a placeholder name the type grammar accepts.
fn encode_iterables(sig: &str) -> String {
    let mut out = String::with_capacity(sig.len());
    let mut rest = sig;
    while let Some(i) = rest.find("Iterable[") {
        out.push_str(&rest[..i]);
        let after = &rest[i + "Iterable[".len()..];
        match after.find(']') {
            Some(j) if is_var_name(after[..j].trim()) => {
                out.push_str(ITERABLE_PREFIX);
                out.push_str(after[..j].trim());
                rest = &after[j + 1..];
            }
            _ => {
                out.push_str("Iterable[");
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

fn is_var_name(s: &str) -> bool {
    s.len() == 1 && s.chars().all(|c| c.is_ascii_uppercase())
}

fn var_of(t: &PyType) -> Option<&str> {
    match t {
        PyType::UserDefined(u) if is_var_name(&u.name) => Some(&u.name),
        _ => None,
    }
}

fn iterable_var_of(t: &PyType) -> Option<&str> {
    match t {
        PyType::UserDefined(u) => u
            .name
            .strip_prefix(ITERABLE_PREFIX)
            .filter(|v| is_var_name(v)),
        _ => None,
    }
}

type Bindings = BTreeMap<String, BTreeSet<PyType>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Match {
    Yes,
    No,
    Unknown,
}

fn bind_all(var: &str, types: impl IntoIterator<Item = PyType>, b: &mut Bindings) {
    b.entry(var.to_string()).or_default().extend(types);
}

fn matches_param(p: &PyType, a: &PyType, b: &mut Bindings) -> Match {
    if let Some(v) = var_of(p) {
        bind_all(v, a.members(), b);
        return Match::Yes;
    }
    if let Some(v) = iterable_var_of(p) {
        if a.is_bare() && a.ctor() != Some(Ctor::Union) && a.ctor() != Some(Ctor::Callable) {
            return Match::Yes;
        }
        return match element_type(a) {
            Ok(elems) => {
                bind_all(v, elems, b);
                Match::Yes
            }
            Err(_) if a.is_user() => Match::Unknown,
            Err(_) => Match::No,
        };
    }
    if a.is_user() && !p.is_user() {
        // A class may implement any protocol.
        return Match::Unknown;
    }
    match p {
        PyType::Generic(Ctor::Union, members) => {
            let mut unknown = false;
            for m in members {
                let mut trial = b.clone();
                match matches_param(m, a, &mut trial) {
                    Match::Yes => {
                        *b = trial;
                        return Match::Yes;
                    }
                    Match::Unknown => unknown = true,
                    Match::No => {}
                }
            }
            if unknown {
                Match::Unknown
            } else {
                Match::No
            }
        }
        PyType::Generic(c, ps) => {
            if a.ctor() != Some(*c) {
                return Match::No;
            }
            let aps = a.params();
            if ps.is_empty() || aps.is_empty() {
                return Match::Yes;
            }
            match c {
                Ctor::Dict => {
                    if let [k, v] = ps.as_slice() {
                        for (pp, offset) in [(k, 0), (v, 1)] {
                            if let Some(var) = var_of(pp) {
                                let found: Vec<PyType> = aps
                                    .iter()
                                    .skip(offset)
                                    .step_by(2)
                                    .flat_map(PyType::members)
                                    .collect();
                                bind_all(var, found, b);
                            }
                        }
                    }
                    Match::Yes
                }
                Ctor::Tuple => {
                    if ps.len() == aps.len() {
                        for (pp, ap) in ps.iter().zip(aps) {
                            if let Some(var) = var_of(pp) {
                                bind_all(var, ap.members(), b);
                            }
                        }
                    }
                    Match::Yes
                }
                Ctor::Callable => Match::Yes,
                _ => {
                    if let [single] = ps.as_slice() {
                        if let Some(var) = var_of(single) {
                            bind_all(var, aps.iter().flat_map(PyType::members), b);
                        }
                    }
                    Match::Yes
                }
            }
        }
        PyType::Elementary(Elem::Int) => yes_if(matches!(a, PyType::Elementary(Elem::Int | Elem::Bool))),
        PyType::Elementary(Elem::Float) => yes_if(a.is_numeric()),
        other => yes_if(other == a),
    }
}

fn yes_if(b: bool) -> Match {
    if b {
        Match::Yes
    } else {
        Match::No
    }
}

/// `None` when the result mentions a placeholder nothing was bound to.
fn substitute(r: &PyType, b: &Bindings) -> Option<PyType> {
    if let Some(v) = var_of(r) {
        let bound = b.get(v).filter(|s| !s.is_empty())?;
        return Some(PyType::union(bound.iter().cloned()));
    }
    match r {
        PyType::Generic(c, ps) => {
            let mapped: Option<Vec<PyType>> = ps.iter().map(|p| substitute(p, b)).collect();
            match (mapped, c) {
                (Some(ps), _) => Some(PyType::generic(*c, ps)),
                (None, Ctor::Union | Ctor::Callable) => None,
                (None, _) => Some(PyType::bare(*c)),
            }
        }
        PyType::ArgList(ps) => ps
            .iter()
            .map(|p| substitute(p, b))
            .collect::<Option<Vec<_>>>()
            .map(PyType::ArgList),
        t => Some(t.clone()),
    }
}

/// Applies a stub signature to positional argument types.
///
/// Missing trailing arguments are allowed (defaults); extra arguments make the
/// result unknown because variadic signatures are not modelled.
pub fn apply_stub(sig: &PyType, args: &[&PyType]) -> Point {
    let PyType::Generic(Ctor::Callable, parts) = sig else {
        return Point::Unknown;
    };
    let [PyType::ArgList(params), ret] = parts.as_slice() else {
        return Point::Unknown;
    };
    if args.len() > params.len() {
        return Point::Unknown;
    }
    let mut b = Bindings::new();
    let mut unknown = false;
    for (p, a) in params.iter().zip(args) {
        match matches_param(p, a, &mut b) {
            Match::Yes => {}
            Match::No => return Point::Types(BTreeSet::new()),
            Match::Unknown => unknown = true,
        }
    }
    if unknown {
        return Point::Unknown;
    }
    match substitute(ret, &b) {
        Some(t) => Point::Types([t].into()),
        None => Point::Unknown,
    }
}
