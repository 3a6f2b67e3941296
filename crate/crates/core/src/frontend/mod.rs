//! Source front end: tokenizer, parser, import analysis and annotation stripping.

pub mod annotations;
pub mod ast;
pub mod imports;
pub mod lexer;
mod parser;

use std::collections::HashMap;

use ast::*;

pub use annotations::{strip_annotations, GroundTruthRecord, SlotKind};
pub use imports::{collect_user_types, detect_operator_overloading, ClassInfo, UserTypeSet};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at {line}:{col}: {message}")]
pub struct SyntaxError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

/// Parses a complete source file and lifts out its functions, classes and imports.
pub fn parse_module(source: &str, path: &str) -> Result<ModuleAst, SyntaxError> {
    let body = parser::parse_statements(source)?;
    let mut lifter = Lifter::default();
    lifter.walk(&body, &[], None);
    Ok(ModuleAst {
        source_path: path.to_string(),
        body,
        functions: lifter.functions,
        classes: lifter.classes,
        imports: lifter.imports,
    })
}

/// Parses a standalone expression, e.g. the text of an annotation.
pub fn parse_expression(source: &str) -> Result<Expr, SyntaxError> {
    parser::parse_expression(source)
}

#[derive(Default)]
struct Lifter {
    functions: Vec<FunctionAst>,
    classes: Vec<ClassDef>,
    imports: Vec<ImportRecord>,
    seen: HashMap<String, usize>,
}

impl Lifter {
    fn unique(&mut self, qualname: String) -> String {
        let n = self.seen.entry(qualname.clone()).or_insert(0);
        *n += 1;
        if *n == 1 {
            qualname
        } else {
            format!("{qualname}#{n}")
        }
    }

    fn walk(&mut self, body: &[Stmt], prefix: &[String], class: Option<&str>) {
        for stmt in body {
            self.stmt(stmt, prefix, class);
        }
    }

    fn stmt(&mut self, stmt: &Stmt, prefix: &[String], class: Option<&str>) {
        match &stmt.kind {
            StmtKind::FunctionDef(f) => {
                let mut path = prefix.to_vec();
                path.push(f.name.clone());
                let qualname = self.unique(path.join("."));
                self.functions.push(FunctionAst {
                    name: f.name.clone(),
                    qualname,
                    class_name: class.map(str::to_string),
                    params: f.params.clone(),
                    returns: f.returns.clone(),
                    body: f.body.clone(),
                    decorators: f.decorators.clone(),
                    span: stmt.span,
                });
                self.walk(&f.body, &path, None);
            }
            StmtKind::ClassDef(c) => {
                let mut path = prefix.to_vec();
                path.push(c.name.clone());
                let qualname = path.join(".");
                let methods = c
                    .body
                    .iter()
                    .filter_map(|s| match &s.kind {
                        StmtKind::FunctionDef(f) => Some(f.name.clone()),
                        _ => None,
                    })
                    .collect();
                self.classes.push(ClassDef {
                    name: c.name.clone(),
                    qualname: qualname.clone(),
                    bases: c.bases.iter().filter_map(|b| b.dotted_name()).collect(),
                    methods,
                    body: c.body.clone(),
                    span: stmt.span,
                });
                self.walk(&c.body, &path, Some(&qualname));
            }
            StmtKind::Import(names) => {
                for a in names {
                    self.imports.push(ImportRecord {
                        module: a.name.clone(),
                        names: Vec::new(),
                        alias: a.asname.clone(),
                        is_from: false,
                        level: 0,
                        span: stmt.span,
                    });
                }
            }
            StmtKind::ImportFrom {
                module,
                names,
                level,
            } => self.imports.push(ImportRecord {
                module: module.clone().unwrap_or_default(),
                names: names.clone(),
                alias: None,
                is_from: true,
                level: *level,
                span: stmt.span,
            }),
            StmtKind::If { body, orelse, .. }
            | StmtKind::While { body, orelse, .. }
            | StmtKind::For { body, orelse, .. } => {
                self.walk(body, prefix, class);
                self.walk(orelse, prefix, class);
            }
            StmtKind::With { body, .. } => self.walk(body, prefix, class),
            StmtKind::Try {
                body,
                handlers,
                orelse,
                finalbody,
            } => {
                self.walk(body, prefix, class);
                for h in handlers {
                    self.walk(&h.body, prefix, class);
                }
                self.walk(orelse, prefix, class);
                self.walk(finalbody, prefix, class);
            }
            _ => {}
        }
    }
}
