//! The type algebra: values, annotation parsing and rendering, valid-type
//! specifications, candidate sets and the projections used by the rules.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::frontend::UserTypeSet;

/// Parametric nesting beyond this depth is truncated to the bare constructor.
pub const DEPTH_CAP: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Elem {
    Bool,
    Int,
    Float,
    Str,
    Bytes,
}

impl Elem {
    pub const ALL: [Elem; 5] = [Elem::Bool, Elem::Int, Elem::Float, Elem::Str, Elem::Bytes];

    pub fn name(self) -> &'static str {
        match self {
            Elem::Bool => "bool",
            Elem::Int => "int",
            Elem::Float => "float",
            Elem::Str => "str",
            Elem::Bytes => "bytes",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ctor {
    List,
    Tuple,
    Dict,
    Set,
    Callable,
    Generator,
    Union,
}

impl Ctor {
    pub const ALL: [Ctor; 7] = [
        Ctor::List,
        Ctor::Tuple,
        Ctor::Dict,
        Ctor::Set,
        Ctor::Callable,
        Ctor::Generator,
        Ctor::Union,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ctor::List => "List",
            Ctor::Tuple => "Tuple",
            Ctor::Dict => "Dict",
            Ctor::Set => "Set",
            Ctor::Callable => "Callable",
            Ctor::Generator => "Generator",
            Ctor::Union => "Union",
        }
    }

    fn from_name(s: &str) -> Option<Ctor> {
        Some(match s {
            "List" | "list" | "typing.List" => Ctor::List,
            "Tuple" | "tuple" | "typing.Tuple" => Ctor::Tuple,
            "Dict" | "dict" | "typing.Dict" => Ctor::Dict,
            "Set" | "set" | "typing.Set" => Ctor::Set,
            "Callable" | "typing.Callable" | "collections.abc.Callable" => Ctor::Callable,
            "Generator" | "typing.Generator" => Ctor::Generator,
            "Union" | "typing.Union" => Ctor::Union,
            _ => return None,
        })
    }

    /// Constructors whose parameters form an unordered set of element types.
    fn is_set_like(self) -> bool {
        matches!(self, Ctor::List | Ctor::Set | Ctor::Generator | Ctor::Union)
    }
}

/// A class or named tuple. Identity is the name; `overloading` records
/// whether the class redefines operators.
#[derive(Debug, Clone)]
pub struct UserType {
    pub name: String,
    pub overloading: bool,
}

impl PartialEq for UserType {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}
impl Eq for UserType {}
impl PartialOrd for UserType {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for UserType {
    fn cmp(&self, other: &Self) -> Ordering {
        self.name.cmp(&other.name)
    }
}
impl Hash for UserType {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.name.hash(state)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PyType {
    Elementary(Elem),
    /// A constructor with its parameters; no parameters means unparameterized.
    /// `Callable` parameters are `[ArgList, return]`.
    Generic(Ctor, Vec<PyType>),
    UserDefined(UserType),
    NoneType,
    TypeType,
    /// Argument list of a `Callable`; never a type on its own.
    ArgList(Vec<PyType>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("precision undefined for {0}")]
    PrecisionUndefined(String),
    #[error("{0} is not iterable")]
    NotIterable(String),
    #[error("{0} is not a Dict")]
    NotADict(String),
    #[error("{0} is not callable")]
    NotCallable(String),
    #[error("cannot parse type at position {position}: {message}")]
    TypeParseError { position: usize, message: String },
}

impl PyType {
    pub const INT: PyType = PyType::Elementary(Elem::Int);
    pub const FLOAT: PyType = PyType::Elementary(Elem::Float);
    pub const STR: PyType = PyType::Elementary(Elem::Str);
    pub const BOOL: PyType = PyType::Elementary(Elem::Bool);
    pub const BYTES: PyType = PyType::Elementary(Elem::Bytes);

    pub fn user(name: impl Into<String>) -> PyType {
        PyType::UserDefined(UserType {
            name: name.into(),
            overloading: false,
        })
    }

    pub fn user_overloading(name: impl Into<String>) -> PyType {
        PyType::UserDefined(UserType {
            name: name.into(),
            overloading: true,
        })
    }

    pub fn bare(c: Ctor) -> PyType {
        PyType::Generic(c, Vec::new())
    }

    pub fn generic(c: Ctor, params: Vec<PyType>) -> PyType {
        PyType::Generic(c, params).normalized()
    }

    pub fn callable(args: Vec<PyType>, ret: PyType) -> PyType {
        PyType::Generic(Ctor::Callable, vec![PyType::ArgList(args), ret])
    }

    pub fn union(members: impl IntoIterator<Item = PyType>) -> PyType {
        PyType::Generic(Ctor::Union, members.into_iter().collect()).normalized()
    }

    pub fn ctor(&self) -> Option<Ctor> {
        match self {
            PyType::Generic(c, _) => Some(*c),
            _ => None,
        }
    }

    pub fn params(&self) -> &[PyType] {
        match self {
            PyType::Generic(_, p) | PyType::ArgList(p) => p,
            _ => &[],
        }
    }

    pub fn is_bare(&self) -> bool {
        matches!(self, PyType::Generic(_, p) if p.is_empty())
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, PyType::Elementary(Elem::Bool | Elem::Int | Elem::Float))
    }

    pub fn is_overloading(&self) -> bool {
        matches!(self, PyType::UserDefined(u) if u.overloading)
    }

    pub fn is_user(&self) -> bool {
        matches!(self, PyType::UserDefined(_))
    }

    /// True when no user-defined name occurs anywhere in the type.
    pub fn is_builtin(&self) -> bool {
        match self {
            PyType::UserDefined(_) => false,
            PyType::Generic(_, p) | PyType::ArgList(p) => p.iter().all(PyType::is_builtin),
            _ => true,
        }
    }

    /// Members of a union, or the type itself.
    pub fn members(&self) -> Vec<PyType> {
        match self {
            PyType::Generic(Ctor::Union, p) if !p.is_empty() => p.clone(),
            t => vec![t.clone()],
        }
    }

    /// Nesting depth of parameter lists; unions do not add a level.
    pub fn depth(&self) -> usize {
        match self {
            PyType::Generic(Ctor::Union, p) | PyType::ArgList(p) => {
                p.iter().map(PyType::depth).max().unwrap_or(0)
            }
            PyType::Generic(_, p) if p.is_empty() => 0,
            PyType::Generic(_, p) => 1 + p.iter().map(PyType::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    /// Replaces subtrees nested deeper than `cap` by their bare constructor.
    pub fn capped(&self, cap: usize) -> PyType {
        match self {
            PyType::Generic(Ctor::Union, p) => {
                PyType::Generic(Ctor::Union, p.iter().map(|t| t.capped(cap)).collect())
                    .normalized()
            }
            PyType::ArgList(p) => PyType::ArgList(p.iter().map(|t| t.capped(cap)).collect()),
            PyType::Generic(c, p) if !p.is_empty() => {
                if cap == 0 {
                    PyType::bare(*c)
                } else {
                    PyType::Generic(*c, p.iter().map(|t| t.capped(cap - 1)).collect()).normalized()
                }
            }
            t => t.clone(),
        }
    }

    /// Canonical form: unions flattened, deduplicated and sorted, single-member
    /// unions unwrapped, set-like container parameters sorted, Generator reduced
    /// to its yield type.
    pub fn normalized(self) -> PyType {
        match self {
            PyType::Generic(Ctor::Union, params) => {
                let mut set = BTreeSet::new();
                for p in params {
                    for m in p.normalized().members() {
                        set.insert(m);
                    }
                }
                match set.len() {
                    0 => PyType::bare(Ctor::Union),
                    1 => set.into_iter().next().unwrap(),
                    _ => PyType::Generic(Ctor::Union, set.into_iter().collect()),
                }
            }
            PyType::Generic(Ctor::Generator, params) if params.len() > 1 => {
                PyType::Generic(Ctor::Generator, vec![params.into_iter().next().unwrap()])
                    .normalized()
            }
            PyType::Generic(c, params) if c.is_set_like() => {
                let mut set = BTreeSet::new();
                for p in params {
                    for m in p.normalized().members() {
                        set.insert(m);
                    }
                }
                PyType::Generic(c, set.into_iter().collect())
            }
            PyType::Generic(c, params) => {
                PyType::Generic(c, params.into_iter().map(PyType::normalized).collect())
            }
            PyType::ArgList(p) => PyType::ArgList(p.into_iter().map(PyType::normalized).collect()),
            t => t,
        }
    }

    /// Sets the operator-overloading flag of every user-defined name from `users`.
    pub fn with_overloading(&self, users: &UserTypeSet) -> PyType {
        match self {
            PyType::UserDefined(u) => PyType::UserDefined(UserType {
                name: u.name.clone(),
                overloading: users.overloads(&u.name),
            }),
            PyType::Generic(c, p) => {
                PyType::Generic(*c, p.iter().map(|t| t.with_overloading(users)).collect())
            }
            PyType::ArgList(p) => PyType::ArgList(p.iter().map(|t| t.with_overloading(users)).collect()),
            t => t.clone(),
        }
    }

    /// Every parameter list dropped, at all depths.
    pub fn erased(&self) -> PyType {
        match self {
            PyType::Generic(Ctor::Union, p) => {
                PyType::union(p.iter().map(PyType::erased))
            }
            PyType::Generic(c, _) => PyType::bare(*c),
            t => t.clone(),
        }
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, p: &[PyType]) -> fmt::Result {
            for (i, t) in p.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{t}")?;
            }
            Ok(())
        }
        match self {
            PyType::Elementary(e) => f.write_str(e.name()),
            PyType::UserDefined(u) => f.write_str(&u.name),
            PyType::NoneType => f.write_str("None"),
            PyType::TypeType => f.write_str("type"),
            PyType::ArgList(p) => {
                f.write_str("[")?;
                list(f, p)?;
                f.write_str("]")
            }
            PyType::Generic(Ctor::Union, p)
                if p.len() == 2 && p.contains(&PyType::NoneType) =>
            {
                let other = p.iter().find(|t| **t != PyType::NoneType).unwrap();
                write!(f, "Optional[{other}]")
            }
            PyType::Generic(c, p) if p.is_empty() => f.write_str(c.name()),
            PyType::Generic(c, p) => {
                write!(f, "{}[", c.name())?;
                list(f, p)?;
                f.write_str("]")
            }
        }
    }
}

// ---- parsing ---------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum TypeTok {
    Ident(String),
    Open,
    Close,
    Comma,
    Pipe,
    Ellipsis,
}

fn lex_type(text: &str) -> Result<Vec<(TypeTok, usize)>, TypeError> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'[' => {
                out.push((TypeTok::Open, i));
                i += 1
            }
            b']' => {
                out.push((TypeTok::Close, i));
                i += 1
            }
            b',' => {
                out.push((TypeTok::Comma, i));
                i += 1
            }
            b'|' => {
                out.push((TypeTok::Pipe, i));
                i += 1
            }
            b'.' if text[i..].starts_with("...") => {
                out.push((TypeTok::Ellipsis, i));
                i += 3
            }
            c if c.is_ascii_alphabetic() || c == b'_' || c >= 0x80 => {
                let start = i;
                while i < b.len()
                    && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'.' || b[i] >= 0x80)
                {
                    if b[i] == b'.' && text[i..].starts_with("...") {
                        break;
                    }
                    i += 1;
                }
                out.push((TypeTok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                return Err(TypeError::TypeParseError {
                    position: i,
                    message: format!("unexpected character {:?}", c as char),
                })
            }
        }
    }
    Ok(out)
}

struct TypeParser {
    toks: Vec<(TypeTok, usize)>,
    pos: usize,
    end: usize,
}

impl TypeParser {
    fn peek(&self) -> Option<&TypeTok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn position(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end)
    }

    fn err<T>(&self, message: &str) -> Result<T, TypeError> {
        Err(TypeError::TypeParseError {
            position: self.position(),
            message: message.to_string(),
        })
    }

    fn expect(&mut self, t: TypeTok, what: &str) -> Result<(), TypeError> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(&format!("expected {what}"))
        }
    }

    /// `atom ('|' atom)*`
    fn ty(&mut self) -> Result<PyType, TypeError> {
        let first = self.atom()?;
        if self.peek() != Some(&TypeTok::Pipe) {
            return Ok(first);
        }
        let mut members = vec![first];
        while self.peek() == Some(&TypeTok::Pipe) {
            self.pos += 1;
            members.push(self.atom()?);
        }
        Ok(PyType::Generic(Ctor::Union, members))
    }

    fn list(&mut self) -> Result<Vec<PyType>, TypeError> {
        let mut items = Vec::new();
        if self.peek() == Some(&TypeTok::Close) {
            return Ok(items);
        }
        loop {
            items.push(self.ty()?);
            if self.peek() == Some(&TypeTok::Comma) {
                self.pos += 1;
                if self.peek() == Some(&TypeTok::Close) {
                    break;
                }
            } else {
                break;
            }
        }
        Ok(items)
    }

    fn atom(&mut self) -> Result<PyType, TypeError> {
        let name = match self.peek() {
            Some(TypeTok::Ident(n)) => n.clone(),
            Some(TypeTok::Open) => {
                // Argument list of a Callable.
                self.pos += 1;
                let items = self.list()?;
                self.expect(TypeTok::Close, "']'")?;
                return Ok(PyType::ArgList(items));
            }
            _ => return self.err("expected a type"),
        };
        self.pos += 1;
        let params = if self.peek() == Some(&TypeTok::Open) {
            self.pos += 1;
            let p = self.list()?;
            self.expect(TypeTok::Close, "']'")?;
            Some(p)
        } else {
            None
        };
        let simple = |t: PyType, me: &Self| match params {
            None => Ok(t),
            Some(_) => me.err(&format!("{name} takes no parameters")),
        };
        match name.as_str() {
            "int" => simple(PyType::INT, self),
            "float" => simple(PyType::FLOAT, self),
            "str" => simple(PyType::STR, self),
            "bool" => simple(PyType::BOOL, self),
            "bytes" => simple(PyType::BYTES, self),
            "None" | "NoneType" => simple(PyType::NoneType, self),
            "type" | "Type" | "typing.Type" => Ok(PyType::TypeType),
            "Optional" | "typing.Optional" => match params {
                Some(p) if p.len() == 1 => Ok(PyType::Generic(
                    Ctor::Union,
                    vec![p.into_iter().next().unwrap(), PyType::NoneType],
                )),
                _ => self.err("Optional takes exactly one parameter"),
            },
            other => match Ctor::from_name(other) {
                Some(Ctor::Callable) => match params {
                    None => Ok(PyType::bare(Ctor::Callable)),
                    Some(p) if p.len() == 2 && matches!(p[0], PyType::ArgList(_)) => {
                        if matches!(p[1], PyType::ArgList(_)) {
                            return self.err("Callable return cannot be an argument list");
                        }
                        Ok(PyType::Generic(Ctor::Callable, p))
                    }
                    Some(_) => self.err("Callable expects [[args], return]"),
                },
                Some(c) => {
                    let p = params.unwrap_or_default();
                    if p.iter().any(|t| matches!(t, PyType::ArgList(_))) {
                        return self.err("argument list outside Callable");
                    }
                    if c == Ctor::Dict && p.len() % 2 != 0 {
                        return self.err("Dict expects key/value pairs");
                    }
                    Ok(PyType::Generic(c, p))
                }
                None => match params {
                    None => Ok(PyType::user(other)),
                    Some(_) => self.err(&format!("unknown generic constructor {other}")),
                },
            },
        }
    }
}

pub fn parse_type_expr(text: &str) -> Result<PyType, TypeError> {
    let toks = lex_type(text)?;
    let mut p = TypeParser {
        toks,
        pos: 0,
        end: text.len(),
    };
    if p.toks.iter().any(|t| t.0 == TypeTok::Ellipsis) {
        let i = p.toks.iter().position(|t| t.0 == TypeTok::Ellipsis).unwrap();
        return Err(TypeError::TypeParseError {
            position: p.toks[i].1,
            message: "'...' is not part of the type grammar".into(),
        });
    }
    let t = p.ty()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    if matches!(t, PyType::ArgList(_)) {
        return Err(TypeError::TypeParseError {
            position: 0,
            message: "argument list outside Callable".into(),
        });
    }
    Ok(t.normalized().capped(DEPTH_CAP))
}

/// Like [`parse_type_expr`], but anything outside the grammar becomes a
/// user-defined type named by its whitespace-free text.
pub fn parse_type_lenient(text: &str) -> PyType {
    parse_type_expr(text).unwrap_or_else(|_| {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        PyType::user(compact)
    })
}

// ---- projections -----------------------------------------------------------

/// Numeric precedence float > int > bool; operator-overloading types win.
pub fn more_precise(t1: &PyType, t2: &PyType) -> Result<PyType, TypeError> {
    for t in [t1, t2] {
        if !t.is_numeric() && !t.is_overloading() {
            return Err(TypeError::PrecisionUndefined(t.to_string()));
        }
    }
    if t1.is_overloading() {
        return Ok(t1.clone());
    }
    if t2.is_overloading() {
        return Ok(t2.clone());
    }
    Ok(std::cmp::max(t1, t2).clone())
}

pub fn element_type(t: &PyType) -> Result<BTreeSet<PyType>, TypeError> {
    match t {
        PyType::Generic(Ctor::List | Ctor::Set | Ctor::Tuple | Ctor::Generator, p) => {
            Ok(p.iter().flat_map(PyType::members).collect())
        }
        PyType::Generic(Ctor::Dict, p) => Ok(p
            .iter()
            .step_by(2)
            .flat_map(PyType::members)
            .collect()),
        PyType::Elementary(Elem::Str) => Ok([PyType::STR].into()),
        PyType::Elementary(Elem::Bytes) => Ok([PyType::INT].into()),
        other => Err(TypeError::NotIterable(other.to_string())),
    }
}

pub fn value_type(t: &PyType) -> Result<BTreeSet<PyType>, TypeError> {
    match t {
        PyType::Generic(Ctor::Dict, p) => Ok(p.iter().skip(1).step_by(2).cloned().collect()),
        other => Err(TypeError::NotADict(other.to_string())),
    }
}

pub fn return_type(t: &PyType) -> Result<BTreeSet<PyType>, TypeError> {
    match t {
        PyType::Generic(Ctor::Callable, p) if p.len() == 2 => Ok([p[1].clone()].into()),
        PyType::Generic(Ctor::Callable, _) => Ok(BTreeSet::new()),
        other => Err(TypeError::NotCallable(other.to_string())),
    }
}

// ---- valid-type specifications ---------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Exact(PyType),
    /// Γ: any elementary type.
    AnyElementary,
    /// A: any generic.
    AnyGeneric,
    /// U: any user-defined type.
    AnyUser,
    /// O: user-defined types with operator overloading.
    AnyOverloading,
    /// A constructor with any parameters.
    Ctor(Ctor),
}

impl Atom {
    pub fn matches(&self, t: &PyType) -> bool {
        match self {
            Atom::Exact(e) => e == t,
            Atom::AnyElementary => matches!(t, PyType::Elementary(_)),
            Atom::AnyGeneric => matches!(t, PyType::Generic(..)),
            Atom::AnyUser => t.is_user(),
            Atom::AnyOverloading => t.is_overloading(),
            Atom::Ctor(c) => t.ctor() == Some(*c),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidTypeSpec {
    pub atoms: Vec<Atom>,
}

impl ValidTypeSpec {
    pub fn new(atoms: impl IntoIterator<Item = Atom>) -> Self {
        ValidTypeSpec {
            atoms: atoms.into_iter().collect(),
        }
    }

    pub fn contains(&self, t: &PyType) -> bool {
        self.atoms.iter().any(|a| a.matches(t))
    }
}

// ---- candidate sets --------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum SlotState {
    #[default]
    Blank,
    Inferred,
    Recommended,
    Validated,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct CandidateSet {
    pub types: BTreeSet<PyType>,
    pub state: SlotState,
}

impl CandidateSet {
    pub fn blank() -> Self {
        Self::default()
    }

    pub fn inferred(types: impl IntoIterator<Item = PyType>) -> Self {
        CandidateSet {
            types: absorb(types.into_iter().flat_map(|t| t.members()).collect()),
            state: SlotState::Inferred,
        }
    }

    pub fn is_blank(&self) -> bool {
        self.state == SlotState::Blank
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    /// Single type for display: the member itself, or a top-level Union.
    pub fn as_type(&self) -> Option<PyType> {
        match self.types.len() {
            0 => None,
            1 => self.types.iter().next().cloned(),
            _ => Some(PyType::union(self.types.iter().cloned())),
        }
    }

    pub fn render(&self) -> Option<String> {
        self.as_type().map(|t| t.to_string())
    }
}

/// Drops unparameterized containers when a parameterized one of the same
/// constructor is present (an empty literal later filled in).
pub fn absorb(mut types: BTreeSet<PyType>) -> BTreeSet<PyType> {
    let filled: BTreeSet<Ctor> = types
        .iter()
        .filter(|t| !t.is_bare())
        .filter_map(PyType::ctor)
        .collect();
    types.retain(|t| !(t.is_bare() && t.ctor().is_some_and(|c| filled.contains(&c))));
    types
}

pub fn intersect(cands: &CandidateSet, spec: &ValidTypeSpec) -> CandidateSet {
    CandidateSet {
        types: cands.types.iter().filter(|t| spec.contains(t)).cloned().collect(),
        state: cands.state,
    }
}
