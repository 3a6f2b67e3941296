//! Syntax tree for the subset of Python the engine analyses.
//!
//! The tree is deliberately close to CPython's `ast` module so that the graph
//! builder can follow the same visiting order. Every node carries a [`Span`].

use std::fmt;

/// Source location. Lines are 1-based, columns 0-based (character offsets),
/// `start`/`end` are byte offsets into the original text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct Span {
    pub line: u32,
    pub col: u32,
    pub end_line: u32,
    pub end_col: u32,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn to(self, other: Span) -> Span {
        Span {
            line: self.line,
            col: self.col,
            end_line: other.end_line,
            end_col: other.end_col,
            start: self.start,
            end: other.end,
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn as_name(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Name(n) => Some(n),
            _ => None,
        }
    }

    /// `a.b.c` as a dotted string, if the expression is a pure attribute chain.
    pub fn dotted_name(&self) -> Option<String> {
        match &self.kind {
            ExprKind::Name(n) => Some(n.clone()),
            ExprKind::Attribute { value, attr } => {
                value.dotted_name().map(|base| format!("{base}.{attr}"))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constant {
    Int(String),
    Float(String),
    Complex(String),
    Str(String),
    Bytes(String),
    Bool(bool),
    None,
    Ellipsis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoolOp {
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mult,
    MatMult,
    Div,
    Mod,
    Pow,
    LShift,
    RShift,
    BitOr,
    BitXor,
    BitAnd,
    FloorDiv,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mult => "*",
            BinOp::MatMult => "@",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Pow => "**",
            BinOp::LShift => "<<",
            BinOp::RShift => ">>",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
            BinOp::BitAnd => "&",
            BinOp::FloorDiv => "//",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Not,
    Invert,
    UAdd,
    USub,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    NotEq,
    Lt,
    LtE,
    Gt,
    GtE,
    Is,
    IsNot,
    In,
    NotIn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Keyword {
    /// `None` for `**kwargs` splats.
    pub arg: Option<String>,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comprehension {
    pub target: Expr,
    pub iter: Expr,
    pub ifs: Vec<Expr>,
    pub is_async: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Name(String),
    Constant(Constant),
    /// f-string; `values` are the embedded expressions.
    JoinedStr(Vec<Expr>),
    BoolOp {
        op: BoolOp,
        values: Vec<Expr>,
    },
    BinOp {
        left: Box<Expr>,
        op: BinOp,
        right: Box<Expr>,
    },
    UnaryOp {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Compare {
        left: Box<Expr>,
        ops: Vec<CmpOp>,
        comparators: Vec<Expr>,
    },
    Call {
        func: Box<Expr>,
        args: Vec<Expr>,
        keywords: Vec<Keyword>,
    },
    Attribute {
        value: Box<Expr>,
        attr: String,
    },
    Subscript {
        value: Box<Expr>,
        slice: Box<Expr>,
    },
    Slice {
        lower: Option<Box<Expr>>,
        upper: Option<Box<Expr>>,
        step: Option<Box<Expr>>,
    },
    Tuple(Vec<Expr>),
    List(Vec<Expr>),
    Set(Vec<Expr>),
    Dict {
        /// `None` marks a `**mapping` entry.
        keys: Vec<Option<Expr>>,
        values: Vec<Expr>,
    },
    ListComp {
        elt: Box<Expr>,
        generators: Vec<Comprehension>,
    },
    SetComp {
        elt: Box<Expr>,
        generators: Vec<Comprehension>,
    },
    GeneratorExp {
        elt: Box<Expr>,
        generators: Vec<Comprehension>,
    },
    DictComp {
        key: Box<Expr>,
        value: Box<Expr>,
        generators: Vec<Comprehension>,
    },
    Lambda {
        params: Vec<Param>,
        body: Box<Expr>,
    },
    IfExp {
        test: Box<Expr>,
        body: Box<Expr>,
        orelse: Box<Expr>,
    },
    Starred(Box<Expr>),
    Await(Box<Expr>),
    Yield(Option<Box<Expr>>),
    YieldFrom(Box<Expr>),
    NamedExpr {
        target: Box<Expr>,
        value: Box<Expr>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Positional,
    VarArgs,
    KeywordOnly,
    VarKeywords,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub annotation: Option<Expr>,
    pub default: Option<Expr>,
    pub kind: ParamKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExceptHandler {
    pub typ: Option<Expr>,
    pub name: Option<String>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WithItem {
    pub context: Expr,
    pub target: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alias {
    pub name: String,
    pub asname: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<Param>,
    pub returns: Option<Expr>,
    pub body: Vec<Stmt>,
    pub decorators: Vec<Expr>,
    pub is_async: bool,
    /// Span of the `def` header line.
    pub header: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassStmt {
    pub name: String,
    pub bases: Vec<Expr>,
    pub keywords: Vec<Keyword>,
    pub body: Vec<Stmt>,
    pub decorators: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Expr(Expr),
    Assign {
        targets: Vec<Expr>,
        value: Expr,
    },
    AugAssign {
        target: Expr,
        op: BinOp,
        value: Expr,
    },
    AnnAssign {
        target: Expr,
        annotation: Expr,
        value: Option<Expr>,
    },
    Return(Option<Expr>),
    If {
        test: Expr,
        body: Vec<Stmt>,
        orelse: Vec<Stmt>,
    },
    For {
        target: Expr,
        iter: Expr,
        body: Vec<Stmt>,
        orelse: Vec<Stmt>,
        is_async: bool,
    },
    While {
        test: Expr,
        body: Vec<Stmt>,
        orelse: Vec<Stmt>,
    },
    FunctionDef(Box<FunctionDef>),
    ClassDef(Box<ClassStmt>),
    Import(Vec<Alias>),
    ImportFrom {
        module: Option<String>,
        names: Vec<Alias>,
        level: u32,
    },
    Pass,
    Break,
    Continue,
    Raise {
        exc: Option<Expr>,
        cause: Option<Expr>,
    },
    Try {
        body: Vec<Stmt>,
        handlers: Vec<ExceptHandler>,
        orelse: Vec<Stmt>,
        finalbody: Vec<Stmt>,
    },
    With {
        items: Vec<WithItem>,
        body: Vec<Stmt>,
        is_async: bool,
    },
    Assert {
        test: Expr,
        msg: Option<Expr>,
    },
    Delete(Vec<Expr>),
    Global(Vec<String>),
    Nonlocal(Vec<String>),
    /// A statement inside a function body that could not be parsed.
    Opaque(String),
}

/// A function (or method, or nested function) lifted out of the tree.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionAst {
    pub name: String,
    /// Dotted path: `Class.method`, `outer.inner`.
    pub qualname: String,
    /// Qualified name of the directly enclosing class, for methods.
    pub class_name: Option<String>,
    pub params: Vec<Param>,
    pub returns: Option<Expr>,
    pub body: Vec<Stmt>,
    pub decorators: Vec<Expr>,
    pub span: Span,
}

impl FunctionAst {
    pub fn is_method(&self) -> bool {
        self.class_name.is_some()
    }

    /// Name of the receiver parameter (`self`/`cls`) of a non-static method.
    pub fn receiver(&self) -> Option<&str> {
        self.class_name.as_ref()?;
        let is_static = self
            .decorators
            .iter()
            .any(|d| d.dotted_name().as_deref() == Some("staticmethod"));
        if is_static {
            return None;
        }
        self.params
            .first()
            .filter(|p| p.kind == ParamKind::Positional)
            .map(|p| p.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDef {
    pub name: String,
    pub qualname: String,
    /// Base class expressions rendered as dotted names (unrenderable bases are skipped).
    pub bases: Vec<String>,
    /// Names of methods defined directly in the class body.
    pub methods: Vec<String>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

impl ClassDef {
    pub fn is_namedtuple(&self) -> bool {
        self.bases
            .iter()
            .any(|b| b == "NamedTuple" || b == "typing.NamedTuple")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportRecord {
    /// Dotted module path (`os.path`), empty for `from . import x`.
    pub module: String,
    /// Names imported by a `from` statement with their aliases; empty for plain `import`.
    pub names: Vec<Alias>,
    /// Alias of a plain `import pkg as alias`.
    pub alias: Option<String>,
    pub is_from: bool,
    pub level: u32,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleAst {
    pub source_path: String,
    pub body: Vec<Stmt>,
    pub functions: Vec<FunctionAst>,
    pub classes: Vec<ClassDef>,
    pub imports: Vec<ImportRecord>,
}

impl ModuleAst {
    pub fn function(&self, qualname: &str) -> Option<&FunctionAst> {
        self.functions.iter().find(|f| f.qualname == qualname)
    }

    pub fn class(&self, name: &str) -> Option<&ClassDef> {
        self.classes
            .iter()
            .find(|c| c.qualname == name)
            .or_else(|| self.classes.iter().find(|c| c.name == name))
    }
}

impl Expr {
    /// Direct sub-expressions in evaluation order.
    pub fn children(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        match &self.kind {
            ExprKind::Name(_) | ExprKind::Constant(_) => {}
            ExprKind::JoinedStr(values) => out.extend(values.iter()),
            ExprKind::BoolOp { values, .. } => out.extend(values.iter()),
            ExprKind::BinOp { left, right, .. } => {
                out.push(&**left);
                out.push(&**right);
            }
            ExprKind::UnaryOp { operand, .. } => out.push(&**operand),
            ExprKind::Compare {
                left, comparators, ..
            } => {
                out.push(&**left);
                out.extend(comparators.iter());
            }
            ExprKind::Call {
                func,
                args,
                keywords,
            } => {
                out.push(&**func);
                out.extend(args.iter());
                out.extend(keywords.iter().map(|k| &k.value));
            }
            ExprKind::Attribute { value, .. } => out.push(&**value),
            ExprKind::Subscript { value, slice } => {
                out.push(&**value);
                out.push(&**slice);
            }
            ExprKind::Slice { lower, upper, step } => {
                out.extend(lower.iter().map(|b| &**b));
                out.extend(upper.iter().map(|b| &**b));
                out.extend(step.iter().map(|b| &**b));
            }
            ExprKind::Tuple(items) | ExprKind::List(items) | ExprKind::Set(items) => {
                out.extend(items.iter())
            }
            ExprKind::Dict { keys, values } => {
                for (k, v) in keys.iter().zip(values) {
                    if let Some(k) = k {
                        out.push(k);
                    }
                    out.push(v);
                }
            }
            ExprKind::ListComp { elt, generators }
            | ExprKind::SetComp { elt, generators }
            | ExprKind::GeneratorExp { elt, generators } => {
                for g in generators {
                    out.push(&g.iter);
                    out.push(&g.target);
                    out.extend(g.ifs.iter());
                }
                out.push(&**elt);
            }
            ExprKind::DictComp {
                key,
                value,
                generators,
            } => {
                for g in generators {
                    out.push(&g.iter);
                    out.push(&g.target);
                    out.extend(g.ifs.iter());
                }
                out.push(&**key);
                out.push(&**value);
            }
            ExprKind::Lambda { params, body } => {
                out.extend(params.iter().filter_map(|p| p.default.as_ref()));
                out.push(&**body);
            }
            ExprKind::IfExp { test, body, orelse } => {
                out.push(&**test);
                out.push(&**body);
                out.push(&**orelse);
            }
            ExprKind::Starred(e) | ExprKind::Await(e) | ExprKind::YieldFrom(e) => out.push(&**e),
            ExprKind::Yield(e) => out.extend(e.iter().map(|b| &**b)),
            ExprKind::NamedExpr { target, value } => {
                out.push(&**value);
                out.push(&**target);
            }
        }
        out
    }

    pub fn children_mut(&mut self) -> Vec<&mut Expr> {
        let mut out: Vec<&mut Expr> = Vec::new();
        match &mut self.kind {
            ExprKind::Name(_) | ExprKind::Constant(_) => {}
            ExprKind::JoinedStr(values) => out.extend(values.iter_mut()),
            ExprKind::BoolOp { values, .. } => out.extend(values.iter_mut()),
            ExprKind::BinOp { left, right, .. } => {
                out.push(&mut **left);
                out.push(&mut **right);
            }
            ExprKind::UnaryOp { operand, .. } => out.push(&mut **operand),
            ExprKind::Compare {
                left, comparators, ..
            } => {
                out.push(&mut **left);
                out.extend(comparators.iter_mut());
            }
            ExprKind::Call {
                func,
                args,
                keywords,
            } => {
                out.push(&mut **func);
                out.extend(args.iter_mut());
                out.extend(keywords.iter_mut().map(|k| &mut k.value));
            }
            ExprKind::Attribute { value, .. } => out.push(&mut **value),
            ExprKind::Subscript { value, slice } => {
                out.push(&mut **value);
                out.push(&mut **slice);
            }
            ExprKind::Slice { lower, upper, step } => {
                out.extend(lower.iter_mut().map(|b| &mut **b));
                out.extend(upper.iter_mut().map(|b| &mut **b));
                out.extend(step.iter_mut().map(|b| &mut **b));
            }
            ExprKind::Tuple(items) | ExprKind::List(items) | ExprKind::Set(items) => {
                out.extend(items.iter_mut())
            }
            ExprKind::Dict { keys, values } => {
                for (k, v) in keys.iter_mut().zip(values.iter_mut()) {
                    if let Some(k) = k {
                        out.push(k);
                    }
                    out.push(v);
                }
            }
            ExprKind::ListComp { elt, generators }
            | ExprKind::SetComp { elt, generators }
            | ExprKind::GeneratorExp { elt, generators } => {
                for g in generators.iter_mut() {
                    out.push(&mut g.iter);
                    out.push(&mut g.target);
                    out.extend(g.ifs.iter_mut());
                }
                out.push(&mut **elt);
            }
            ExprKind::DictComp {
                key,
                value,
                generators,
            } => {
                for g in generators.iter_mut() {
                    out.push(&mut g.iter);
                    out.push(&mut g.target);
                    out.extend(g.ifs.iter_mut());
                }
                out.push(&mut **key);
                out.push(&mut **value);
            }
            ExprKind::Lambda { params, body } => {
                out.extend(params.iter_mut().filter_map(|p| p.default.as_mut()));
                out.push(&mut **body);
            }
            ExprKind::IfExp { test, body, orelse } => {
                out.push(&mut **test);
                out.push(&mut **body);
                out.push(&mut **orelse);
            }
            ExprKind::Starred(e) | ExprKind::Await(e) | ExprKind::YieldFrom(e) => {
                out.push(&mut **e)
            }
            ExprKind::Yield(e) => out.extend(e.iter_mut().map(|b| &mut **b)),
            ExprKind::NamedExpr { target, value } => {
                out.push(&mut **value);
                out.push(&mut **target);
            }
        }
        out
    }
}
