//! Collection of user-defined types: classes defined in the file, classes
//! imported by name, and classes and named tuples of resolvable packages.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use super::ast::*;
use super::parse_module;

/// Method names that redefine an operator. Reflected and in-place forms count too.
pub const OPERATOR_DUNDERS: &[&str] = &[
    // arithmetic
    "__add__", "__sub__", "__mul__", "__matmul__", "__truediv__", "__floordiv__", "__mod__",
    "__divmod__", "__pow__",
    "__radd__", "__rsub__", "__rmul__", "__rmatmul__", "__rtruediv__", "__rfloordiv__",
    "__rmod__", "__rdivmod__", "__rpow__",
    "__iadd__", "__isub__", "__imul__", "__imatmul__", "__itruediv__", "__ifloordiv__",
    "__imod__", "__ipow__",
    // bitwise
    "__lshift__", "__rshift__", "__and__", "__or__", "__xor__",
    "__rlshift__", "__rrshift__", "__rand__", "__ror__", "__rxor__",
    "__ilshift__", "__irshift__", "__iand__", "__ior__", "__ixor__",
    // unary
    "__neg__", "__pos__", "__invert__",
    // comparison
    "__lt__", "__le__", "__gt__", "__ge__", "__eq__", "__ne__",
    // containers
    "__contains__", "__getitem__", "__setitem__", "__delitem__", "__iter__",
];

/// Names of the type grammar and `typing` helpers; never user-defined types.
const RESERVED: &[&str] = &[
    "int", "float", "str", "bool", "bytes", "None", "type", "object", "List", "Tuple", "Dict",
    "Set", "Callable", "Generator", "Union", "Optional", "Any", "list", "tuple", "dict", "set",
    "Iterable", "Iterator", "Sequence", "Mapping", "NamedTuple", "TypeVar", "Generic",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassInfo {
    pub qualname: String,
    /// Defining file, when the source could be located.
    pub origin: Option<PathBuf>,
    pub overloads_operators: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UserTypeSet {
    pub entries: BTreeMap<String, ClassInfo>,
    /// Module names and aliases bound by plain `import` statements; `alias.Class`
    /// resolves to `Class` when `alias` is one of these.
    pub module_prefixes: BTreeSet<String>,
}

impl UserTypeSet {
    pub fn contains(&self, name: &str) -> bool {
        self.resolve(name).is_some()
    }

    /// Maps a possibly module-qualified class reference to its entry name.
    pub fn resolve<'a>(&'a self, name: &str) -> Option<&'a str> {
        if let Some((k, _)) = self.entries.get_key_value(name) {
            return Some(k);
        }
        let (prefix, last) = name.rsplit_once('.')?;
        if self.module_prefixes.contains(prefix) {
            self.entries.get_key_value(last).map(|(k, _)| k.as_str())
        } else {
            None
        }
    }

    pub fn overloads(&self, name: &str) -> bool {
        self.resolve(name)
            .and_then(|n| self.entries.get(n))
            .is_some_and(|c| c.overloads_operators)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn insert(&mut self, name: &str, info: ClassInfo) {
        if RESERVED.contains(&name) {
            return;
        }
        // A located definition beats a name-only record.
        match self.entries.get(name) {
            Some(existing) if existing.origin.is_some() || info.origin.is_none() => {
                if existing.origin.is_none() && info.origin.is_none() {
                    let merged = existing.overloads_operators || info.overloads_operators;
                    self.entries.get_mut(name).unwrap().overloads_operators = merged;
                }
            }
            _ => {
                self.entries.insert(name.to_string(), info);
            }
        }
    }
}

pub fn detect_operator_overloading(class_def: &ClassDef) -> bool {
    class_def
        .methods
        .iter()
        .any(|m| OPERATOR_DUNDERS.contains(&m.as_str()))
}

pub fn collect_user_types(module: &ModuleAst, search_paths: &[PathBuf]) -> UserTypeSet {
    let mut set = UserTypeSet::default();
    let here = Path::new(&module.source_path).parent().map(Path::to_path_buf);
    for c in &module.classes {
        set.insert(
            &c.name,
            ClassInfo {
                qualname: c.qualname.clone(),
                origin: Some(PathBuf::from(&module.source_path)),
                overloads_operators: detect_operator_overloading(c),
            },
        );
    }
    for name in namedtuple_assignments(&module.body) {
        set.insert(
            &name,
            ClassInfo {
                qualname: name.clone(),
                origin: Some(PathBuf::from(&module.source_path)),
                overloads_operators: false,
            },
        );
    }
    for imp in &module.imports {
        let base = if imp.level > 0 { here.as_deref() } else { None };
        let found = locate_package(&imp.module, imp.level, base, search_paths);
        if imp.is_from {
            let defined = found
                .as_ref()
                .map(|files| classes_in(files))
                .unwrap_or_default();
            for alias in &imp.names {
                let bound = alias.asname.as_deref().unwrap_or(&alias.name);
                if let Some(info) = defined.get(&alias.name) {
                    set.insert(bound, info.clone());
                } else if alias.name != "*" && starts_uppercase(&alias.name) {
                    // Unresolvable: keep the name, origin unknown.
                    set.insert(
                        bound,
                        ClassInfo {
                            qualname: qualify(&imp.module, &alias.name),
                            origin: None,
                            overloads_operators: false,
                        },
                    );
                }
                if alias.name == "*" {
                    for (n, info) in &defined {
                        set.insert(n, info.clone());
                    }
                }
            }
        } else {
            set.module_prefixes.insert(imp.module.clone());
            if let Some(a) = &imp.alias {
                set.module_prefixes.insert(a.clone());
            }
            if let Some(files) = found {
                for (n, info) in classes_in(&files) {
                    set.insert(&n, info);
                }
            }
        }
    }
    set
}

fn starts_uppercase(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

fn qualify(module: &str, name: &str) -> String {
    if module.is_empty() {
        name.to_string()
    } else {
        format!("{module}.{name}")
    }
}

/// Returns the source files making up `module`, or `None` if it cannot be found.
fn locate_package(
    module: &str,
    level: u32,
    base: Option<&Path>,
    search_paths: &[PathBuf],
) -> Option<Vec<PathBuf>> {
    let rel: PathBuf = module.split('.').filter(|s| !s.is_empty()).collect();
    let roots: Vec<PathBuf> = if level > 0 {
        let mut b = base?.to_path_buf();
        for _ in 1..level {
            b = b.parent()?.to_path_buf();
        }
        vec![b]
    } else {
        search_paths.to_vec()
    };
    for root in roots {
        let dir = root.join(&rel);
        if dir.is_dir() {
            let mut files = Vec::new();
            collect_py_files(&dir, &mut files);
            files.sort();
            return Some(files);
        }
        let file = dir.with_extension("py");
        if file.is_file() {
            return Some(vec![file]);
        }
    }
    None
}

fn collect_py_files(dir: &Path, out: &mut Vec<PathBuf>) {
    let Ok(rd) = std::fs::read_dir(dir) else {
        return;
    };
    for entry in rd.flatten() {
        let p = entry.path();
        if p.is_dir() {
            collect_py_files(&p, out);
        } else if p.extension().is_some_and(|e| e == "py") {
            out.push(p);
        }
    }
}

fn classes_in(files: &[PathBuf]) -> BTreeMap<String, ClassInfo> {
    let mut out = BTreeMap::new();
    for f in files {
        let Ok(src) = std::fs::read_to_string(f) else {
            continue;
        };
        let Ok(m) = parse_module(&src, &f.to_string_lossy()) else {
            continue;
        };
        for c in &m.classes {
            out.entry(c.name.clone()).or_insert_with(|| ClassInfo {
                qualname: c.qualname.clone(),
                origin: Some(f.clone()),
                overloads_operators: detect_operator_overloading(c),
            });
        }
        for n in namedtuple_assignments(&m.body) {
            out.entry(n.clone()).or_insert_with(|| ClassInfo {
                qualname: n,
                origin: Some(f.clone()),
                overloads_operators: false,
            });
        }
    }
    out
}

/// Module-level `X = namedtuple(...)` / `X = NamedTuple(...)` bindings.
fn namedtuple_assignments(body: &[Stmt]) -> Vec<String> {
    let mut out = Vec::new();
    for s in body {
        if let StmtKind::Assign { targets, value } = &s.kind {
            let ExprKind::Call { func, .. } = &value.kind else {
                continue;
            };
            let Some(callee) = func.dotted_name() else {
                continue;
            };
            let last = callee.rsplit('.').next().unwrap_or("");
            if last == "namedtuple" || last == "NamedTuple" {
                for t in targets {
                    if let Some(n) = t.as_name() {
                        out.push(n.to_string());
                    }
                }
            }
        }
    }
    out
}
