//! Recursive-descent parser for Python source.
//!
//! Follows the CPython PEG grammar closely enough for analysis purposes.
//! Statements inside function bodies that fail to parse are kept as
//! [`StmtKind::Opaque`]; errors anywhere else abort the file.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::SyntaxError;

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
    "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if",
    "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try",
    "while", "with", "yield",
];

type PResult<T> = Result<T, SyntaxError>;

pub(crate) struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
    function_depth: usize,
}

pub(crate) fn parse_statements(src: &str) -> PResult<Vec<Stmt>> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        src,
        toks,
        pos: 0,
        function_depth: 0,
    };
    p.file()
}

/// Parses a single expression (used for f-string fragments and annotation strings).
pub(crate) fn parse_expression(src: &str) -> PResult<Expr> {
    let wrapped = format!("({src}\n)");
    let toks = tokenize(&wrapped)?;
    let mut p = Parser {
        src: &wrapped,
        toks,
        pos: 0,
        function_depth: 0,
    };
    p.expect_op("(")?;
    let e = p.star_expressions()?;
    p.expect_op(")")?;
    let mut e = e;
    shift_spans(&mut e, -1);
    Ok(e)
}

fn shift_spans(e: &mut Expr, delta: isize) {
    e.span.start = (e.span.start as isize + delta).max(0) as usize;
    e.span.end = (e.span.end as isize + delta).max(0) as usize;
    if e.span.line == 1 {
        e.span.col = e.span.col.saturating_sub(1);
    }
    if e.span.end_line == 1 {
        e.span.end_col = e.span.end_col.saturating_sub(1);
    }
    for c in e.children_mut() {
        shift_spans(c, delta);
    }
}

fn set_span_recursive(e: &mut Expr, span: Span) {
    e.span = span;
    for c in e.children_mut() {
        set_span_recursive(c, span);
    }
}

impl<'a> Parser<'a> {
    // ---- token helpers -------------------------------------------------

    fn tok(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn tok_at(&self, off: usize) -> &Tok {
        let i = (self.pos + off).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(self.tok(), Tok::Op(o) if *o == op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.tok(), Tok::Name(n) if n == kw)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let s = self.span();
        Err(SyntaxError {
            line: s.line,
            col: s.col,
            message: msg.into(),
        })
    }

    fn expect_op(&mut self, op: &str) -> PResult<Span> {
        if self.at_op(op) {
            Ok(self.advance().span)
        } else {
            self.error(format!("expected '{op}', found {}", describe(self.tok())))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.at_kw(kw) {
            Ok(self.advance().span)
        } else {
            self.error(format!("expected '{kw}', found {}", describe(self.tok())))
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, Span)> {
        match self.tok().clone() {
            Tok::Name(n) if !KEYWORDS.contains(&n.as_str()) => {
                let t = self.advance();
                Ok((n, t.span))
            }
            other => self.error(format!("expected identifier, found {}", describe(&other))),
        }
    }

    fn expect_newline(&mut self) -> PResult<()> {
        match self.tok() {
            Tok::Newline => {
                self.advance();
                Ok(())
            }
            Tok::Eof => Ok(()),
            other => self.error(format!("expected newline, found {}", describe(other))),
        }
    }

    fn at_ident(&self) -> bool {
        matches!(self.tok(), Tok::Name(n) if !KEYWORDS.contains(&n.as_str()))
    }

    // ---- statements ----------------------------------------------------

    fn file(&mut self) -> PResult<Vec<Stmt>> {
        let mut body = Vec::new();
        loop {
            match self.tok() {
                Tok::Eof => break,
                Tok::Newline => {
                    self.advance();
                }
                Tok::Indent => return self.error("unexpected indent"),
                _ => body.extend(self.statement()?),
            }
        }
        Ok(body)
    }

    fn statement_recovering(&mut self) -> PResult<Vec<Stmt>> {
        let save = self.pos;
        match self.statement() {
            Ok(s) => Ok(s),
            Err(e) if self.function_depth > 0 => {
                let _ = e;
                self.pos = save;
                Ok(vec![self.skip_statement()])
            }
            Err(e) => Err(e),
        }
    }

    /// Skips the logical line at the cursor plus any block indented under it.
    fn skip_statement(&mut self) -> Stmt {
        let start = self.span();
        while !matches!(self.tok(), Tok::Newline | Tok::Eof) {
            self.advance();
        }
        let mut end = self.prev_span();
        if matches!(self.tok(), Tok::Newline) {
            self.advance();
        }
        if matches!(self.tok(), Tok::Indent) {
            let mut depth = 0usize;
            loop {
                match self.tok() {
                    Tok::Indent => depth += 1,
                    Tok::Dedent => {
                        depth -= 1;
                        if depth == 0 {
                            end = self.prev_span();
                            self.advance();
                            break;
                        }
                    }
                    Tok::Eof => break,
                    _ => {}
                }
                self.advance();
            }
        }
        let span = start.to(end);
        let text = self
            .src
            .get(span.start..span.end.max(span.start))
            .unwrap_or("")
            .to_string();
        Stmt {
            kind: StmtKind::Opaque(text),
            span,
        }
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        if matches!(self.tok(), Tok::Newline) {
            self.advance();
            if !matches!(self.tok(), Tok::Indent) {
                return self.error("expected an indented block");
            }
            self.advance();
            let mut body = Vec::new();
            loop {
                match self.tok() {
                    Tok::Dedent => {
                        self.advance();
                        break;
                    }
                    Tok::Eof => break,
                    Tok::Newline => {
                        self.advance();
                    }
                    _ => body.extend(self.statement_recovering()?),
                }
            }
            Ok(body)
        } else {
            self.simple_statements()
        }
    }

    fn statement(&mut self) -> PResult<Vec<Stmt>> {
        match self.tok() {
            Tok::Name(n) => match n.as_str() {
                "if" => Ok(vec![self.if_stmt()?]),
                "while" => Ok(vec![self.while_stmt()?]),
                "for" => Ok(vec![self.for_stmt(false, self.span())?]),
                "try" => Ok(vec![self.try_stmt()?]),
                "with" => Ok(vec![self.with_stmt(false, self.span())?]),
                "def" => Ok(vec![self.funcdef(Vec::new(), false, self.span())?]),
                "class" => Ok(vec![self.classdef(Vec::new(), self.span())?]),
                "async" => {
                    let start = self.span();
                    self.advance();
                    if self.at_kw("def") {
                        Ok(vec![self.funcdef(Vec::new(), true, start)?])
                    } else if self.at_kw("for") {
                        Ok(vec![self.for_stmt(true, start)?])
                    } else if self.at_kw("with") {
                        Ok(vec![self.with_stmt(true, start)?])
                    } else {
                        self.error("expected 'def', 'for' or 'with' after 'async'")
                    }
                }
                _ => self.simple_statements(),
            },
            Tok::Op("@") => Ok(vec![self.decorated()?]),
            Tok::Indent => self.error("unexpected indent"),
            _ => self.simple_statements(),
        }
    }

    fn simple_statements(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = vec![self.small_statement()?];
        while self.eat_op(";") {
            if matches!(self.tok(), Tok::Newline | Tok::Eof) {
                break;
            }
            out.push(self.small_statement()?);
        }
        self.expect_newline()?;
        Ok(out)
    }

    fn small_statement(&mut self) -> PResult<Stmt> {
        let start = self.span();
        let kind = match self.tok() {
            Tok::Name(n) => match n.as_str() {
                "pass" => {
                    self.advance();
                    StmtKind::Pass
                }
                "break" => {
                    self.advance();
                    StmtKind::Break
                }
                "continue" => {
                    self.advance();
                    StmtKind::Continue
                }
                "return" => {
                    self.advance();
                    if self.at_simple_end() {
                        StmtKind::Return(None)
                    } else {
                        StmtKind::Return(Some(self.star_expressions()?))
                    }
                }
                "raise" => {
                    self.advance();
                    if self.at_simple_end() {
                        StmtKind::Raise {
                            exc: None,
                            cause: None,
                        }
                    } else {
                        let exc = self.expression()?;
                        let cause = if self.eat_kw("from") {
                            Some(self.expression()?)
                        } else {
                            None
                        };
                        StmtKind::Raise {
                            exc: Some(exc),
                            cause,
                        }
                    }
                }
                "global" | "nonlocal" => {
                    let is_global = n == "global";
                    self.advance();
                    let mut names = vec![self.expect_ident()?.0];
                    while self.eat_op(",") {
                        names.push(self.expect_ident()?.0);
                    }
                    if is_global {
                        StmtKind::Global(names)
                    } else {
                        StmtKind::Nonlocal(names)
                    }
                }
                "del" => {
                    self.advance();
                    let mut targets = vec![self.bitor()?];
                    while self.eat_op(",") {
                        if self.at_simple_end() {
                            break;
                        }
                        targets.push(self.bitor()?);
                    }
                    StmtKind::Delete(targets)
                }
                "assert" => {
                    self.advance();
                    let test = self.expression()?;
                    let msg = if self.eat_op(",") {
                        Some(self.expression()?)
                    } else {
                        None
                    };
                    StmtKind::Assert { test, msg }
                }
                "import" => {
                    self.advance();
                    let mut names = vec![self.dotted_alias()?];
                    while self.eat_op(",") {
                        names.push(self.dotted_alias()?);
                    }
                    StmtKind::Import(names)
                }
                "from" => self.import_from()?,
                _ => self.expression_statement()?,
            },
            _ => self.expression_statement()?,
        };
        Ok(Stmt {
            kind,
            span: start.to(self.prev_span()),
        })
    }

    fn at_simple_end(&self) -> bool {
        matches!(self.tok(), Tok::Newline | Tok::Eof | Tok::Op(";"))
    }

    fn dotted_name(&mut self) -> PResult<String> {
        let mut name = self.expect_ident()?.0;
        while self.at_op(".") {
            self.advance();
            name.push('.');
            name.push_str(&self.expect_ident()?.0);
        }
        Ok(name)
    }

    fn dotted_alias(&mut self) -> PResult<Alias> {
        let name = self.dotted_name()?;
        let asname = if self.eat_kw("as") {
            Some(self.expect_ident()?.0)
        } else {
            None
        };
        Ok(Alias { name, asname })
    }

    fn import_from(&mut self) -> PResult<StmtKind> {
        self.expect_kw("from")?;
        let mut level = 0;
        loop {
            if self.eat_op(".") {
                level += 1;
            } else if self.eat_op("...") {
                level += 3;
            } else {
                break;
            }
        }
        let module = if self.at_kw("import") {
            None
        } else {
            Some(self.dotted_name()?)
        };
        self.expect_kw("import")?;
        let mut names = Vec::new();
        if self.eat_op("*") {
            names.push(Alias {
                name: "*".into(),
                asname: None,
            });
        } else {
            let paren = self.eat_op("(");
            loop {
                let name = self.expect_ident()?.0;
                let asname = if self.eat_kw("as") {
                    Some(self.expect_ident()?.0)
                } else {
                    None
                };
                names.push(Alias { name, asname });
                if !self.eat_op(",") {
                    break;
                }
                if paren && self.at_op(")") {
                    break;
                }
            }
            if paren {
                self.expect_op(")")?;
            }
        }
        Ok(StmtKind::ImportFrom {
            module,
            names,
            level,
        })
    }

    fn expression_statement(&mut self) -> PResult<StmtKind> {
        let first = self.star_expressions_or_yield()?;
        if self.at_op(":") {
            self.advance();
            check_target(&first, false)?;
            let annotation = self.expression()?;
            let value = if self.eat_op("=") {
                Some(self.star_expressions_or_yield()?)
            } else {
                None
            };
            return Ok(StmtKind::AnnAssign {
                target: first,
                annotation,
                value,
            });
        }
        if let Tok::Op(op) = self.tok() {
            if let Some(bin) = augmented_op(op) {
                self.advance();
                check_target(&first, false)?;
                let value = self.star_expressions_or_yield()?;
                return Ok(StmtKind::AugAssign {
                    target: first,
                    op: bin,
                    value,
                });
            }
        }
        if self.at_op("=") {
            let mut exprs = vec![first];
            while self.eat_op("=") {
                exprs.push(self.star_expressions_or_yield()?);
            }
            let value = exprs.pop().unwrap();
            for t in &exprs {
                check_target(t, true)?;
            }
            return Ok(StmtKind::Assign {
                targets: exprs,
                value,
            });
        }
        Ok(StmtKind::Expr(first))
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let start = self.advance().span; // `if` or `elif`
        let test = self.named_expression()?;
        self.expect_op(":")?;
        let body = self.block()?;
        let orelse = if self.at_kw("elif") {
            vec![self.if_stmt()?]
        } else if self.at_kw("else") {
            self.advance();
            self.expect_op(":")?;
            self.block()?
        } else {
            Vec::new()
        };
        Ok(Stmt {
            kind: StmtKind::If { test, body, orelse },
            span: start.to(self.prev_span()),
        })
    }

    fn while_stmt(&mut self) -> PResult<Stmt> {
        let start = self.expect_kw("while")?;
        let test = self.named_expression()?;
        self.expect_op(":")?;
        let body = self.block()?;
        let orelse = self.else_block()?;
        Ok(Stmt {
            kind: StmtKind::While { test, body, orelse },
            span: start.to(self.prev_span()),
        })
    }

    fn else_block(&mut self) -> PResult<Vec<Stmt>> {
        if self.eat_kw("else") {
            self.expect_op(":")?;
            self.block()
        } else {
            Ok(Vec::new())
        }
    }

    fn for_stmt(&mut self, is_async: bool, start: Span) -> PResult<Stmt> {
        self.expect_kw("for")?;
        let target = self.target_list()?;
        self.expect_kw("in")?;
        let iter = self.star_expressions()?;
        self.expect_op(":")?;
        let body = self.block()?;
        let orelse = self.else_block()?;
        Ok(Stmt {
            kind: StmtKind::For {
                target,
                iter,
                body,
                orelse,
                is_async,
            },
            span: start.to(self.prev_span()),
        })
    }

    fn try_stmt(&mut self) -> PResult<Stmt> {
        let start = self.expect_kw("try")?;
        self.expect_op(":")?;
        let body = self.block()?;
        let mut handlers = Vec::new();
        while self.at_kw("except") {
            let hstart = self.advance().span;
            self.eat_op("*");
            let (typ, name) = if self.at_op(":") {
                (None, None)
            } else {
                let typ = self.expression()?;
                let typ = if self.at_op(",") {
                    let mut items = vec![typ];
                    while self.eat_op(",") {
                        items.push(self.expression()?);
                    }
                    let span = items[0].span.to(self.prev_span());
                    Expr::new(ExprKind::Tuple(items), span)
                } else {
                    typ
                };
                let name = if self.eat_kw("as") {
                    Some(self.expect_ident()?.0)
                } else {
                    None
                };
                (Some(typ), name)
            };
            self.expect_op(":")?;
            let hbody = self.block()?;
            handlers.push(ExceptHandler {
                typ,
                name,
                body: hbody,
                span: hstart.to(self.prev_span()),
            });
        }
        let orelse = self.else_block()?;
        let finalbody = if self.eat_kw("finally") {
            self.expect_op(":")?;
            self.block()?
        } else {
            Vec::new()
        };
        if handlers.is_empty() && finalbody.is_empty() {
            return self.error("expected 'except' or 'finally' block");
        }
        Ok(Stmt {
            kind: StmtKind::Try {
                body,
                handlers,
                orelse,
                finalbody,
            },
            span: start.to(self.prev_span()),
        })
    }

    fn with_item(&mut self) -> PResult<WithItem> {
        let context = self.expression()?;
        let target = if self.eat_kw("as") {
            let t = self.star_target()?;
            check_target(&t, true)?;
            Some(t)
        } else {
            None
        };
        Ok(WithItem { context, target })
    }

    fn with_stmt(&mut self, is_async: bool, start: Span) -> PResult<Stmt> {
        self.expect_kw("with")?;
        let mut items = None;
        if self.at_op("(") {
            let save = self.pos;
            let attempt = (|| -> PResult<Vec<WithItem>> {
                self.expect_op("(")?;
                let mut items = vec![self.with_item()?];
                while self.eat_op(",") {
                    if self.at_op(")") {
                        break;
                    }
                    items.push(self.with_item()?);
                }
                self.expect_op(")")?;
                if !self.at_op(":") {
                    return self.error("expected ':'");
                }
                Ok(items)
            })();
            match attempt {
                Ok(i) => items = Some(i),
                Err(_) => self.pos = save,
            }
        }
        let items = match items {
            Some(i) => i,
            None => {
                let mut items = vec![self.with_item()?];
                while self.eat_op(",") {
                    items.push(self.with_item()?);
                }
                items
            }
        };
        self.expect_op(":")?;
        let body = self.block()?;
        Ok(Stmt {
            kind: StmtKind::With {
                items,
                body,
                is_async,
            },
            span: start.to(self.prev_span()),
        })
    }

    fn decorated(&mut self) -> PResult<Stmt> {
        let start = self.span();
        let mut decorators = Vec::new();
        while self.eat_op("@") {
            decorators.push(self.named_expression()?);
            self.expect_newline()?;
            while matches!(self.tok(), Tok::Newline) {
                self.advance();
            }
        }
        if self.at_kw("def") {
            self.funcdef(decorators, false, start)
        } else if self.at_kw("async") {
            self.advance();
            self.funcdef(decorators, true, start)
        } else if self.at_kw("class") {
            self.classdef(decorators, start)
        } else {
            self.error("expected function or class after decorator")
        }
    }

    fn funcdef(&mut self, decorators: Vec<Expr>, is_async: bool, start: Span) -> PResult<Stmt> {
        let def_span = self.expect_kw("def")?;
        let (name, _) = self.expect_ident()?;
        self.expect_op("(")?;
        let params = self.parameters(")", true)?;
        self.expect_op(")")?;
        let returns = if self.eat_op("->") {
            Some(self.expression()?)
        } else {
            None
        };
        self.expect_op(":")?;
        let header = def_span.to(self.prev_span());
        self.function_depth += 1;
        let body = self.block();
        self.function_depth -= 1;
        let body = body?;
        Ok(Stmt {
            kind: StmtKind::FunctionDef(Box::new(FunctionDef {
                name,
                params,
                returns,
                body,
                decorators,
                is_async,
                header,
            })),
            span: start.to(self.prev_span()),
        })
    }

    fn parameters(&mut self, close: &str, annotations: bool) -> PResult<Vec<Param>> {
        let mut params = Vec::new();
        let mut keyword_only = false;
        while !self.at_op(close) {
            let start = self.span();
            if self.eat_op("/") {
                // positional-only marker
            } else if self.eat_op("**") {
                let (name, _) = self.expect_ident()?;
                let annotation = self.param_annotation(annotations)?;
                params.push(Param {
                    name,
                    annotation,
                    default: None,
                    kind: ParamKind::VarKeywords,
                    span: start.to(self.prev_span()),
                });
            } else if self.eat_op("*") {
                keyword_only = true;
                if self.at_ident() {
                    let (name, _) = self.expect_ident()?;
                    let annotation = self.param_annotation(annotations)?;
                    params.push(Param {
                        name,
                        annotation,
                        default: None,
                        kind: ParamKind::VarArgs,
                        span: start.to(self.prev_span()),
                    });
                }
            } else {
                let (name, _) = self.expect_ident()?;
                let annotation = self.param_annotation(annotations)?;
                let default = if self.eat_op("=") {
                    Some(self.expression()?)
                } else {
                    None
                };
                params.push(Param {
                    name,
                    annotation,
                    default,
                    kind: if keyword_only {
                        ParamKind::KeywordOnly
                    } else {
                        ParamKind::Positional
                    },
                    span: start.to(self.prev_span()),
                });
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(params)
    }

    fn param_annotation(&mut self, allowed: bool) -> PResult<Option<Expr>> {
        if allowed && self.eat_op(":") {
            Ok(Some(self.expression()?))
        } else {
            Ok(None)
        }
    }

    fn classdef(&mut self, decorators: Vec<Expr>, start: Span) -> PResult<Stmt> {
        self.expect_kw("class")?;
        let (name, _) = self.expect_ident()?;
        let (mut bases, mut keywords) = (Vec::new(), Vec::new());
        if self.eat_op("(") {
            let (a, k) = self.call_arguments()?;
            bases = a;
            keywords = k;
            self.expect_op(")")?;
        }
        self.expect_op(":")?;
        let body = self.block()?;
        Ok(Stmt {
            kind: StmtKind::ClassDef(Box::new(ClassStmt {
                name,
                bases,
                keywords,
                body,
                decorators,
            })),
            span: start.to(self.prev_span()),
        })
    }

    // ---- expressions ---------------------------------------------------

    fn star_expressions_or_yield(&mut self) -> PResult<Expr> {
        if self.at_kw("yield") {
            self.yield_expr()
        } else {
            self.star_expressions()
        }
    }

    fn yield_expr(&mut self) -> PResult<Expr> {
        let start = self.expect_kw("yield")?;
        if self.eat_kw("from") {
            let e = self.expression()?;
            let span = start.to(e.span);
            return Ok(Expr::new(ExprKind::YieldFrom(Box::new(e)), span));
        }
        if matches!(self.tok(), Tok::Newline | Tok::Eof | Tok::Op(")" | "]" | "}" | ";" | "=")) {
            return Ok(Expr::new(ExprKind::Yield(None), start));
        }
        let e = self.star_expressions()?;
        let span = start.to(e.span);
        Ok(Expr::new(ExprKind::Yield(Some(Box::new(e))), span))
    }

    /// Comma-separated expressions, forming a tuple when a comma is present.
    pub(crate) fn star_expressions(&mut self) -> PResult<Expr> {
        let first = self.star_expression()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let start = first.span;
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_expression_end() {
                break;
            }
            items.push(self.star_expression()?);
        }
        Ok(Expr::new(ExprKind::Tuple(items), start.to(self.prev_span())))
    }

    fn at_expression_end(&self) -> bool {
        matches!(
            self.tok(),
            Tok::Newline
                | Tok::Eof
                | Tok::Op(")" | "]" | "}" | "=" | ":" | ";")
                | Tok::Op(
                    "+=" | "-=" | "*=" | "/=" | "//=" | "%=" | "**=" | ">>=" | "<<=" | "&="
                        | "^=" | "|=" | "@="
                )
        ) || self.at_kw("in")
    }

    fn star_expression(&mut self) -> PResult<Expr> {
        if self.at_op("*") {
            let start = self.advance().span;
            let e = self.bitor()?;
            let span = start.to(e.span);
            return Ok(Expr::new(ExprKind::Starred(Box::new(e)), span));
        }
        self.expression()
    }

    fn star_named_expression(&mut self) -> PResult<Expr> {
        if self.at_op("*") {
            return self.star_expression();
        }
        self.named_expression()
    }

    fn named_expression(&mut self) -> PResult<Expr> {
        if self.at_ident() && matches!(self.tok_at(1), Tok::Op(":=")) {
            let (name, span) = self.expect_ident()?;
            self.advance();
            let value = self.expression()?;
            let full = span.to(value.span);
            return Ok(Expr::new(
                ExprKind::NamedExpr {
                    target: Box::new(Expr::new(ExprKind::Name(name), span)),
                    value: Box::new(value),
                },
                full,
            ));
        }
        self.expression()
    }

    pub(crate) fn expression(&mut self) -> PResult<Expr> {
        if self.at_kw("lambda") {
            return self.lambda();
        }
        let body = self.disjunction()?;
        if self.at_kw("if") {
            // Ternary; a trailing `if` without `else` belongs to a comprehension.
            let save = self.pos;
            self.advance();
            let test = self.disjunction()?;
            if !self.eat_kw("else") {
                self.pos = save;
                return Ok(body);
            }
            let orelse = self.expression()?;
            let span = body.span.to(orelse.span);
            return Ok(Expr::new(
                ExprKind::IfExp {
                    test: Box::new(test),
                    body: Box::new(body),
                    orelse: Box::new(orelse),
                },
                span,
            ));
        }
        Ok(body)
    }

    fn lambda(&mut self) -> PResult<Expr> {
        let start = self.expect_kw("lambda")?;
        let params = self.parameters(":", false)?;
        self.expect_op(":")?;
        let body = self.expression()?;
        let span = start.to(body.span);
        Ok(Expr::new(
            ExprKind::Lambda {
                params,
                body: Box::new(body),
            },
            span,
        ))
    }

    fn disjunction(&mut self) -> PResult<Expr> {
        let first = self.conjunction()?;
        if !self.at_kw("or") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("or") {
            values.push(self.conjunction()?);
        }
        let span = values[0].span.to(values.last().unwrap().span);
        Ok(Expr::new(
            ExprKind::BoolOp {
                op: BoolOp::Or,
                values,
            },
            span,
        ))
    }

    fn conjunction(&mut self) -> PResult<Expr> {
        let first = self.inversion()?;
        if !self.at_kw("and") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("and") {
            values.push(self.inversion()?);
        }
        let span = values[0].span.to(values.last().unwrap().span);
        Ok(Expr::new(
            ExprKind::BoolOp {
                op: BoolOp::And,
                values,
            },
            span,
        ))
    }

    fn inversion(&mut self) -> PResult<Expr> {
        if self.at_kw("not") {
            let start = self.advance().span;
            let operand = self.inversion()?;
            let span = start.to(operand.span);
            return Ok(Expr::new(
                ExprKind::UnaryOp {
                    op: UnaryOp::Not,
                    operand: Box::new(operand),
                },
                span,
            ));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let left = self.bitor()?;
        let mut ops = Vec::new();
        let mut comparators = Vec::new();
        loop {
            let op = match self.tok() {
                Tok::Op("==") => CmpOp::Eq,
                Tok::Op("!=") => CmpOp::NotEq,
                Tok::Op("<") => CmpOp::Lt,
                Tok::Op("<=") => CmpOp::LtE,
                Tok::Op(">") => CmpOp::Gt,
                Tok::Op(">=") => CmpOp::GtE,
                Tok::Name(n) if n == "in" => CmpOp::In,
                Tok::Name(n) if n == "is" => {
                    if matches!(self.tok_at(1), Tok::Name(m) if m == "not") {
                        self.advance();
                        CmpOp::IsNot
                    } else {
                        CmpOp::Is
                    }
                }
                Tok::Name(n) if n == "not" && matches!(self.tok_at(1), Tok::Name(m) if m == "in") => {
                    self.advance();
                    CmpOp::NotIn
                }
                _ => break,
            };
            self.advance();
            ops.push(op);
            comparators.push(self.bitor()?);
        }
        if ops.is_empty() {
            return Ok(left);
        }
        let span = left.span.to(comparators.last().unwrap().span);
        Ok(Expr::new(
            ExprKind::Compare {
                left: Box::new(left),
                ops,
                comparators,
            },
            span,
        ))
    }

    fn binary_level(
        &mut self,
        ops: &[(&str, BinOp)],
        next: fn(&mut Self) -> PResult<Expr>,
    ) -> PResult<Expr> {
        let mut left = next(self)?;
        'outer: loop {
            for (sym, op) in ops {
                if self.at_op(sym) {
                    self.advance();
                    let right = next(self)?;
                    let span = left.span.to(right.span);
                    left = Expr::new(
                        ExprKind::BinOp {
                            left: Box::new(left),
                            op: *op,
                            right: Box::new(right),
                        },
                        span,
                    );
                    continue 'outer;
                }
            }
            break;
        }
        Ok(left)
    }

    pub(crate) fn bitor(&mut self) -> PResult<Expr> {
        self.binary_level(&[("|", BinOp::BitOr)], Self::bitxor)
    }

    fn bitxor(&mut self) -> PResult<Expr> {
        self.binary_level(&[("^", BinOp::BitXor)], Self::bitand)
    }

    fn bitand(&mut self) -> PResult<Expr> {
        self.binary_level(&[("&", BinOp::BitAnd)], Self::shift)
    }

    fn shift(&mut self) -> PResult<Expr> {
        self.binary_level(&[("<<", BinOp::LShift), (">>", BinOp::RShift)], Self::sum)
    }

    fn sum(&mut self) -> PResult<Expr> {
        self.binary_level(&[("+", BinOp::Add), ("-", BinOp::Sub)], Self::term)
    }

    fn term(&mut self) -> PResult<Expr> {
        self.binary_level(
            &[
                ("*", BinOp::Mult),
                ("//", BinOp::FloorDiv),
                ("/", BinOp::Div),
                ("%", BinOp::Mod),
                ("@", BinOp::MatMult),
            ],
            Self::factor,
        )
    }

    fn factor(&mut self) -> PResult<Expr> {
        let op = match self.tok() {
            Tok::Op("+") => Some(UnaryOp::UAdd),
            Tok::Op("-") => Some(UnaryOp::USub),
            Tok::Op("~") => Some(UnaryOp::Invert),
            _ => None,
        };
        if let Some(op) = op {
            let start = self.advance().span;
            let operand = self.factor()?;
            let span = start.to(operand.span);
            return Ok(Expr::new(
                ExprKind::UnaryOp {
                    op,
                    operand: Box::new(operand),
                },
                span,
            ));
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Expr> {
        let base = if self.at_kw("await") {
            let start = self.advance().span;
            let e = self.primary()?;
            let span = start.to(e.span);
            Expr::new(ExprKind::Await(Box::new(e)), span)
        } else {
            self.primary()?
        };
        if self.eat_op("**") {
            let exp = self.factor()?;
            let span = base.span.to(exp.span);
            return Ok(Expr::new(
                ExprKind::BinOp {
                    left: Box::new(base),
                    op: BinOp::Pow,
                    right: Box::new(exp),
                },
                span,
            ));
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        loop {
            if self.at_op(".") {
                self.advance();
                let (attr, s) = self.expect_ident()?;
                let span = e.span.to(s);
                e = Expr::new(
                    ExprKind::Attribute {
                        value: Box::new(e),
                        attr,
                    },
                    span,
                );
            } else if self.at_op("(") {
                self.advance();
                let (args, keywords) = self.call_arguments()?;
                let end = self.expect_op(")")?;
                let span = e.span.to(end);
                e = Expr::new(
                    ExprKind::Call {
                        func: Box::new(e),
                        args,
                        keywords,
                    },
                    span,
                );
            } else if self.at_op("[") {
                self.advance();
                let slice = self.slices()?;
                let end = self.expect_op("]")?;
                let span = e.span.to(end);
                e = Expr::new(
                    ExprKind::Subscript {
                        value: Box::new(e),
                        slice: Box::new(slice),
                    },
                    span,
                );
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn call_arguments(&mut self) -> PResult<(Vec<Expr>, Vec<Keyword>)> {
        let mut args = Vec::new();
        let mut keywords = Vec::new();
        while !self.at_op(")") {
            if self.at_op("**") {
                self.advance();
                let value = self.expression()?;
                keywords.push(Keyword { arg: None, value });
            } else if self.at_op("*") {
                args.push(self.star_expression()?);
            } else if self.at_ident() && matches!(self.tok_at(1), Tok::Op("=")) {
                let (name, _) = self.expect_ident()?;
                self.advance();
                let value = self.expression()?;
                keywords.push(Keyword {
                    arg: Some(name),
                    value,
                });
            } else {
                let e = self.named_expression()?;
                if self.at_kw("for") || self.at_kw("async") {
                    let generators = self.comprehension_clauses()?;
                    let span = e.span.to(self.prev_span());
                    args.push(Expr::new(
                        ExprKind::GeneratorExp {
                            elt: Box::new(e),
                            generators,
                        },
                        span,
                    ));
                } else {
                    args.push(e);
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok((args, keywords))
    }

    fn slices(&mut self) -> PResult<Expr> {
        let first = self.slice()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let start = first.span;
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            items.push(self.slice()?);
        }
        Ok(Expr::new(ExprKind::Tuple(items), start.to(self.prev_span())))
    }

    fn slice(&mut self) -> PResult<Expr> {
        let start = self.span();
        let lower = if self.at_op(":") {
            None
        } else {
            let e = self.star_named_expression()?;
            if !self.at_op(":") {
                return Ok(e);
            }
            Some(Box::new(e))
        };
        self.expect_op(":")?;
        let upper = if self.at_op(":") || self.at_op("]") || self.at_op(",") {
            None
        } else {
            Some(Box::new(self.expression()?))
        };
        let step = if self.eat_op(":") {
            if self.at_op("]") || self.at_op(",") {
                None
            } else {
                Some(Box::new(self.expression()?))
            }
        } else {
            None
        };
        Ok(Expr::new(
            ExprKind::Slice { lower, upper, step },
            start.to(self.prev_span()),
        ))
    }

    fn comprehension_clauses(&mut self) -> PResult<Vec<Comprehension>> {
        let mut gens = Vec::new();
        loop {
            let is_async = self.eat_kw("async");
            if !self.eat_kw("for") {
                if is_async {
                    return self.error("expected 'for'");
                }
                break;
            }
            let target = self.target_list()?;
            self.expect_kw("in")?;
            let iter = self.disjunction()?;
            let mut ifs = Vec::new();
            while self.eat_kw("if") {
                ifs.push(self.disjunction()?);
            }
            gens.push(Comprehension {
                target,
                iter,
                ifs,
                is_async,
            });
        }
        Ok(gens)
    }

    fn star_target(&mut self) -> PResult<Expr> {
        if self.at_op("*") {
            let start = self.advance().span;
            let e = self.star_target()?;
            let span = start.to(e.span);
            return Ok(Expr::new(ExprKind::Starred(Box::new(e)), span));
        }
        self.bitor()
    }

    /// Targets of `for` statements and comprehensions.
    fn target_list(&mut self) -> PResult<Expr> {
        let first = self.star_target()?;
        let result = if self.at_op(",") {
            let start = first.span;
            let mut items = vec![first];
            while self.eat_op(",") {
                if self.at_kw("in") || self.at_op("=") {
                    break;
                }
                items.push(self.star_target()?);
            }
            Expr::new(ExprKind::Tuple(items), start.to(self.prev_span()))
        } else {
            first
        };
        check_target(&result, true)?;
        Ok(result)
    }

    fn atom(&mut self) -> PResult<Expr> {
        let t = self.toks[self.pos].clone();
        match &t.tok {
            Tok::Name(n) => match n.as_str() {
                "True" => {
                    self.advance();
                    Ok(Expr::new(ExprKind::Constant(Constant::Bool(true)), t.span))
                }
                "False" => {
                    self.advance();
                    Ok(Expr::new(ExprKind::Constant(Constant::Bool(false)), t.span))
                }
                "None" => {
                    self.advance();
                    Ok(Expr::new(ExprKind::Constant(Constant::None), t.span))
                }
                _ if KEYWORDS.contains(&n.as_str()) => {
                    self.error(format!("invalid syntax at keyword '{n}'"))
                }
                _ => {
                    self.advance();
                    Ok(Expr::new(ExprKind::Name(n.clone()), t.span))
                }
            },
            Tok::Number(text) => {
                self.advance();
                let lower = text.to_ascii_lowercase();
                let c = if lower.ends_with('j') {
                    Constant::Complex(text.clone())
                } else if !lower.starts_with("0x")
                    && (lower.contains('.') || lower.contains('e'))
                {
                    Constant::Float(text.clone())
                } else {
                    Constant::Int(text.clone())
                };
                Ok(Expr::new(ExprKind::Constant(c), t.span))
            }
            Tok::Str { .. } => self.strings(),
            Tok::Op("...") => {
                self.advance();
                Ok(Expr::new(ExprKind::Constant(Constant::Ellipsis), t.span))
            }
            Tok::Op("(") => self.paren_atom(),
            Tok::Op("[") => self.list_atom(),
            Tok::Op("{") => self.brace_atom(),
            other => self.error(format!("invalid syntax at {}", describe(other))),
        }
    }

    fn strings(&mut self) -> PResult<Expr> {
        let start = self.span();
        let mut is_bytes = false;
        let mut fstring = false;
        let mut content = String::new();
        let mut values = Vec::new();
        while let Tok::Str { raw } = self.tok().clone() {
            let span = self.advance().span;
            let (prefix, body) = split_string_literal(&raw);
            if prefix.contains('b') {
                is_bytes = true;
            }
            if prefix.contains('f') {
                fstring = true;
                for frag in fstring_fragments(body) {
                    let mut e = parse_expression(&frag).map_err(|mut err| {
                        err.line = span.line;
                        err.col = span.col;
                        err
                    })?;
                    set_span_recursive(&mut e, span);
                    values.push(e);
                }
            }
            content.push_str(body);
        }
        let span = start.to(self.prev_span());
        if fstring {
            return Ok(Expr::new(ExprKind::JoinedStr(values), span));
        }
        let c = if is_bytes {
            Constant::Bytes(content)
        } else {
            Constant::Str(content)
        };
        Ok(Expr::new(ExprKind::Constant(c), span))
    }

    fn paren_atom(&mut self) -> PResult<Expr> {
        let start = self.expect_op("(")?;
        if self.at_op(")") {
            let end = self.advance().span;
            return Ok(Expr::new(ExprKind::Tuple(Vec::new()), start.to(end)));
        }
        if self.at_kw("yield") {
            let e = self.yield_expr()?;
            self.expect_op(")")?;
            return Ok(e);
        }
        let first = self.star_named_expression()?;
        if self.at_kw("for") || self.at_kw("async") {
            let generators = self.comprehension_clauses()?;
            let end = self.expect_op(")")?;
            return Ok(Expr::new(
                ExprKind::GeneratorExp {
                    elt: Box::new(first),
                    generators,
                },
                start.to(end),
            ));
        }
        if self.at_op(",") {
            let mut items = vec![first];
            while self.eat_op(",") {
                if self.at_op(")") {
                    break;
                }
                items.push(self.star_named_expression()?);
            }
            let end = self.expect_op(")")?;
            return Ok(Expr::new(ExprKind::Tuple(items), start.to(end)));
        }
        self.expect_op(")")?;
        Ok(first)
    }

    fn list_atom(&mut self) -> PResult<Expr> {
        let start = self.expect_op("[")?;
        if self.at_op("]") {
            let end = self.advance().span;
            return Ok(Expr::new(ExprKind::List(Vec::new()), start.to(end)));
        }
        let first = self.star_named_expression()?;
        if self.at_kw("for") || self.at_kw("async") {
            let generators = self.comprehension_clauses()?;
            let end = self.expect_op("]")?;
            return Ok(Expr::new(
                ExprKind::ListComp {
                    elt: Box::new(first),
                    generators,
                },
                start.to(end),
            ));
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            items.push(self.star_named_expression()?);
        }
        let end = self.expect_op("]")?;
        Ok(Expr::new(ExprKind::List(items), start.to(end)))
    }

    fn brace_atom(&mut self) -> PResult<Expr> {
        let start = self.expect_op("{")?;
        if self.at_op("}") {
            let end = self.advance().span;
            return Ok(Expr::new(
                ExprKind::Dict {
                    keys: Vec::new(),
                    values: Vec::new(),
                },
                start.to(end),
            ));
        }
        // dict
        let first_key = if self.eat_op("**") {
            None
        } else {
            Some(self.star_named_expression()?)
        };
        if first_key.is_none() || self.at_op(":") {
            let mut keys = Vec::new();
            let mut values = Vec::new();
            match first_key {
                None => {
                    values.push(self.bitor()?);
                    keys.push(None);
                }
                Some(k) => {
                    self.expect_op(":")?;
                    let v = self.expression()?;
                    if self.at_kw("for") || self.at_kw("async") {
                        let generators = self.comprehension_clauses()?;
                        let end = self.expect_op("}")?;
                        return Ok(Expr::new(
                            ExprKind::DictComp {
                                key: Box::new(k),
                                value: Box::new(v),
                                generators,
                            },
                            start.to(end),
                        ));
                    }
                    keys.push(Some(k));
                    values.push(v);
                }
            }
            while self.eat_op(",") {
                if self.at_op("}") {
                    break;
                }
                if self.eat_op("**") {
                    keys.push(None);
                    values.push(self.bitor()?);
                } else {
                    let k = self.expression()?;
                    self.expect_op(":")?;
                    keys.push(Some(k));
                    values.push(self.expression()?);
                }
            }
            let end = self.expect_op("}")?;
            return Ok(Expr::new(ExprKind::Dict { keys, values }, start.to(end)));
        }
        let first = first_key.unwrap();
        if self.at_kw("for") || self.at_kw("async") {
            let generators = self.comprehension_clauses()?;
            let end = self.expect_op("}")?;
            return Ok(Expr::new(
                ExprKind::SetComp {
                    elt: Box::new(first),
                    generators,
                },
                start.to(end),
            ));
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("}") {
                break;
            }
            items.push(self.star_named_expression()?);
        }
        let end = self.expect_op("}")?;
        Ok(Expr::new(ExprKind::Set(items), start.to(end)))
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Name(n) => format!("'{n}'"),
        Tok::Number(n) => format!("number {n}"),
        Tok::Str { .. } => "string".into(),
        Tok::Op(o) => format!("'{o}'"),
        Tok::Newline => "newline".into(),
        Tok::Indent => "indent".into(),
        Tok::Dedent => "dedent".into(),
        Tok::Eof => "end of file".into(),
    }
}

fn augmented_op(op: &str) -> Option<BinOp> {
    Some(match op {
        "+=" => BinOp::Add,
        "-=" => BinOp::Sub,
        "*=" => BinOp::Mult,
        "@=" => BinOp::MatMult,
        "/=" => BinOp::Div,
        "%=" => BinOp::Mod,
        "**=" => BinOp::Pow,
        "<<=" => BinOp::LShift,
        ">>=" => BinOp::RShift,
        "|=" => BinOp::BitOr,
        "^=" => BinOp::BitXor,
        "&=" => BinOp::BitAnd,
        "//=" => BinOp::FloorDiv,
        _ => return None,
    })
}

fn check_target(e: &Expr, allow_unpack: bool) -> PResult<()> {
    let bad = |e: &Expr| {
        Err(SyntaxError {
            line: e.span.line,
            col: e.span.col,
            message: "cannot assign to expression".into(),
        })
    };
    match &e.kind {
        ExprKind::Name(_) | ExprKind::Attribute { .. } | ExprKind::Subscript { .. } => Ok(()),
        ExprKind::Tuple(items) | ExprKind::List(items) if allow_unpack => {
            items.iter().try_for_each(|i| check_target(i, true))
        }
        ExprKind::Starred(inner) if allow_unpack => check_target(inner, true),
        _ => bad(e),
    }
}

/// Splits `rb'...'` into (`"rb"`, body-without-quotes).
fn split_string_literal(raw: &str) -> (String, &str) {
    let q = raw.find(['"', '\'']).unwrap_or(0);
    let prefix = raw[..q].to_ascii_lowercase();
    let rest = &raw[q..];
    let quote = &rest[..1];
    let triple = rest.len() >= 6 && rest[1..].starts_with(quote) && rest[2..].starts_with(quote);
    let n = if triple { 3 } else { 1 };
    let body = rest.get(n..rest.len().saturating_sub(n)).unwrap_or("");
    (prefix, body)
}

/// Extracts the expression source of each `{...}` replacement field of an f-string body.
fn fstring_fragments(body: &str) -> Vec<String> {
    let chars: Vec<char> = body.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '{' {
            if chars.get(i + 1) == Some(&'{') {
                i += 2;
                continue;
            }
            let mut depth = 0i32;
            let mut j = i + 1;
            let mut quote: Option<char> = None;
            let mut expr_end = None;
            while j < chars.len() {
                let d = chars[j];
                if let Some(q) = quote {
                    if d == q {
                        quote = None;
                    }
                } else {
                    match d {
                        '\'' | '"' => quote = Some(d),
                        '(' | '[' | '{' => depth += 1,
                        ')' | ']' => depth -= 1,
                        '}' if depth > 0 => depth -= 1,
                        '}' => {
                            if expr_end.is_none() {
                                expr_end = Some(j);
                            }
                            break;
                        }
                        '!' if depth == 0 && chars.get(j + 1) != Some(&'=') && expr_end.is_none() => {
                            expr_end = Some(j)
                        }
                        ':' if depth == 0 && expr_end.is_none() => expr_end = Some(j),
                        _ => {}
                    }
                }
                j += 1;
            }
            let end = expr_end.unwrap_or(j);
            let mut text: String = chars[i + 1..end.min(chars.len())].iter().collect();
            let trimmed = text.trim_end();
            if trimmed.ends_with('=') && !trimmed.ends_with("==") && !trimmed.ends_with("!=") {
                text = trimmed[..trimmed.len() - 1].to_string();
            }
            if !text.trim().is_empty() {
                out.push(text);
            }
            // nested replacement fields inside a format spec
            if end < j {
                out.extend(fstring_fragments(&chars[end + 1..j].iter().collect::<String>()));
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}
