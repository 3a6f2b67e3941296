//! Removal of type annotations, keeping each one as a ground-truth record.

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::{parse_module, SyntaxError};

/// Function name used for annotations outside any function or class.
pub const MODULE_SCOPE: &str = "<module>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotKind {
    Argument,
    Return,
    Local,
}

impl SlotKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SlotKind::Argument => "argument",
            SlotKind::Return => "return",
            SlotKind::Local => "local",
        }
    }

    pub fn parse(s: &str) -> Option<SlotKind> {
        match s {
            "argument" | "arg" => Some(SlotKind::Argument),
            "return" => Some(SlotKind::Return),
            "local" => Some(SlotKind::Local),
            _ => None,
        }
    }
}

/// One removed annotation. `annotation` is the annotation source text
/// (string forward references are unquoted).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub function: String,
    pub kind: SlotKind,
    pub name: String,
    pub annotation: String,
    /// Line of the annotated target; 0 when unknown.
    #[serde(default)]
    pub line: u32,
}

pub fn strip_annotations(source: &str) -> Result<(String, Vec<GroundTruthRecord>), SyntaxError> {
    let module = parse_module(source, "")?;
    let mut st = Stripper {
        src: source,
        qualnames: module.functions.iter().map(|f| f.qualname.clone()).collect(),
        next_fn: 0,
        edits: Vec::new(),
        records: Vec::new(),
    };
    st.body(&module.body, MODULE_SCOPE);
    st.edits.sort_by_key(|e| std::cmp::Reverse(e.0));
    let mut out = source.to_string();
    for (start, end, text) in st.edits {
        out.replace_range(start..end, &text);
    }
    Ok((out, st.records))
}

struct Stripper<'a> {
    src: &'a str,
    /// Lifted qualnames in definition order, which matches this walk's order.
    qualnames: Vec<String>,
    next_fn: usize,
    edits: Vec<(usize, usize, String)>,
    records: Vec<GroundTruthRecord>,
}

impl Stripper<'_> {
    fn annotation_text(&self, e: &Expr) -> String {
        if let ExprKind::Constant(Constant::Str(s)) = &e.kind {
            return s.trim().to_string();
        }
        self.src[e.span.start..e.span.end].to_string()
    }

    /// Byte offset of the last occurrence of `marker` before `pos`, widened
    /// over the blanks preceding it.
    fn find_back(&self, pos: usize, marker: &str) -> usize {
        let at = self.src[..pos].rfind(marker).unwrap_or(pos);
        at - (self.src[..at].len() - self.src[..at].trim_end_matches([' ', '\t']).len())
    }

    fn body(&mut self, body: &[Stmt], scope: &str) {
        for s in body {
            self.stmt(s, scope);
        }
    }

    fn stmt(&mut self, s: &Stmt, scope: &str) {
        match &s.kind {
            StmtKind::FunctionDef(f) => {
                let qualname = self.qualnames[self.next_fn].clone();
                self.next_fn += 1;
                for p in &f.params {
                    if let Some(a) = &p.annotation {
                        let colon = self.find_back(a.span.start, ":");
                        self.edits.push((colon, a.span.end, String::new()));
                        self.records.push(GroundTruthRecord {
                            function: qualname.clone(),
                            kind: SlotKind::Argument,
                            name: p.name.clone(),
                            annotation: self.annotation_text(a),
                            line: p.span.line,
                        });
                    }
                }
                if let Some(r) = &f.returns {
                    let arrow = self.find_back(r.span.start, "->");
                    self.edits.push((arrow, r.span.end, String::new()));
                    self.records.push(GroundTruthRecord {
                        function: qualname.clone(),
                        kind: SlotKind::Return,
                        name: String::new(),
                        annotation: self.annotation_text(r),
                        line: f.header.line,
                    });
                }
                self.body(&f.body, &qualname);
            }
            StmtKind::ClassDef(c) => {
                let cls_scope = if scope == MODULE_SCOPE {
                    c.name.clone()
                } else {
                    format!("{scope}.{}", c.name)
                };
                self.body(&c.body, &cls_scope);
            }
            StmtKind::AnnAssign {
                target,
                annotation,
                value,
            } => {
                let name = target
                    .dotted_name()
                    .unwrap_or_else(|| self.src[target.span.start..target.span.end].to_string());
                self.records.push(GroundTruthRecord {
                    function: scope.to_string(),
                    kind: SlotKind::Local,
                    name,
                    annotation: self.annotation_text(annotation),
                    line: target.span.line,
                });
                if value.is_some() {
                    self.edits
                        .push((target.span.end, annotation.span.end, String::new()));
                } else {
                    // A bare declaration has no assignment left to keep.
                    self.edits.push((s.span.start, s.span.end, "pass".into()));
                }
            }
            StmtKind::If { body, orelse, .. }
            | StmtKind::While { body, orelse, .. }
            | StmtKind::For { body, orelse, .. } => {
                self.body(body, scope);
                self.body(orelse, scope);
            }
            StmtKind::With { body, .. } => self.body(body, scope),
            StmtKind::Try {
                body,
                handlers,
                orelse,
                finalbody,
            } => {
                self.body(body, scope);
                for h in handlers {
                    self.body(&h.body, scope);
                }
                self.body(orelse, scope);
                self.body(finalbody, scope);
            }
            _ => {}
        }
    }
}
