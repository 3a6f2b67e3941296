mod lexer {
    use pytdg::frontend::lexer::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn indentation_tokens() {
        let toks = kinds("if x:\n    y = 1\nz\n");
        assert!(toks.contains(&Tok::Indent));
        assert!(toks.contains(&Tok::Dedent));
        assert_eq!(toks.last(), Some(&Tok::Eof));
    }

    #[test]
    fn brackets_join_lines() {
        let toks = kinds("f(a,\n  b)\n");
        let newlines = toks.iter().filter(|t| **t == Tok::Newline).count();
        assert_eq!(newlines, 1);
    }

    #[test]
    fn string_prefixes_and_triple_quotes() {
        let toks = kinds("x = rb'a\\'b' + f\"{y}\" + '''multi\nline'''\n");
        let strs = toks.iter().filter(|t| matches!(t, Tok::Str { .. })).count();
        assert_eq!(strs, 3);
    }

    #[test]
    fn unclosed_bracket_reports_its_line() {
        let err = tokenize("def f(").unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn comment_lines_do_not_indent() {
        let toks = kinds("def f():\n        # comment\n    return 1\n");
        assert_eq!(toks.iter().filter(|t| **t == Tok::Indent).count(), 1);
    }

    #[test]
    fn numbers() {
        let toks = kinds("1 0x1F 1.5e-3 2j 1_000 .5\n");
        let nums: Vec<_> = toks
            .iter()
            .filter_map(|t| match t {
                Tok::Number(n) => Some(n.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(nums, ["1", "0x1F", "1.5e-3", "2j", "1_000", ".5"]);
    }
}

mod annotations {
    use pytdg::frontend::annotations::*;
    use pytdg::frontend::ast::*;
    use pytdg::frontend::parse_module;

    #[test]
    fn strips_arguments_and_return() {
        let (out, recs) = strip_annotations("def f(x: int) -> str: ...\n").unwrap();
        assert_eq!(out, "def f(x): ...\n");
        assert_eq!(recs.len(), 2);
        assert_eq!(
            (recs[0].function.as_str(), recs[0].kind, recs[0].name.as_str(), recs[0].annotation.as_str()),
            ("f", SlotKind::Argument, "x", "int")
        );
        assert_eq!((recs[1].kind, recs[1].annotation.as_str()), (SlotKind::Return, "str"));
    }

    #[test]
    fn unannotated_source_unchanged() {
        let src = "def g(): ...\n";
        let (out, recs) = strip_annotations(src).unwrap();
        assert_eq!(out, src);
        assert!(recs.is_empty());
    }

    #[test]
    fn local_annotation() {
        let src = "def f():\n    v: List[int] = []\n    w: int\n    return v\n";
        let (out, recs) = strip_annotations(src).unwrap();
        assert_eq!(out, "def f():\n    v = []\n    pass\n    return v\n");
        assert_eq!(recs[0].kind, SlotKind::Local);
        assert_eq!(recs[0].annotation, "List[int]");
        let m = parse_module(&out, "").unwrap();
        assert!(matches!(m.functions[0].body[0].kind, StmtKind::Assign { .. }));
    }

    #[test]
    fn class_attributes_and_defaults() {
        let src = "class C:\n    x: int = 0\n    def m(self, a: 'Node' = None, *args: int, **kw: str) -> 'C':\n        self.y: float = 1.0\n";
        let (out, recs) = strip_annotations(src).unwrap();
        assert!(parse_module(&out, "").is_ok());
        assert!(!out.contains("int") && !out.contains("Node"));
        let summary: Vec<_> = recs
            .iter()
            .map(|r| format!("{}:{}:{}:{}", r.function, r.kind.as_str(), r.name, r.annotation))
            .collect();
        assert_eq!(
            summary,
            [
                "C:local:x:int",
                "C.m:argument:a:Node",
                "C.m:argument:args:int",
                "C.m:argument:kw:str",
                "C.m:return::C",
                "C.m:local:self.y:float",
            ]
        );
    }
}

mod module {
    use pytdg::frontend::*;

    #[test]
    fn minimal_function() {
        let m = parse_module("def f():\n    return 1", "m.py").unwrap();
        assert_eq!(m.functions.len(), 1);
        assert_eq!(m.classes.len(), 0);
    }

    #[test]
    fn unclosed_paren_reports_line_one() {
        let err = parse_module("def f(", "m.py").unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn qualified_names() {
        let src = "\
class A:
    def m(self):
        def inner():
            pass
def f():
    pass
def f():
    pass
";
        let m = parse_module(src, "m.py").unwrap();
        let names: Vec<_> = m.functions.iter().map(|f| f.qualname.as_str()).collect();
        assert_eq!(names, ["A.m", "A.m.inner", "f", "f#2"]);
        assert_eq!(m.functions[0].class_name.as_deref(), Some("A"));
        assert_eq!(m.functions[1].class_name, None);
    }

    #[test]
    fn imports_collected_at_any_depth() {
        let src = "import os.path as p\ndef f():\n    from .x import Y\n";
        let m = parse_module(src, "m.py").unwrap();
        assert_eq!(m.imports.len(), 2);
        assert_eq!(m.imports[0].alias.as_deref(), Some("p"));
        assert!(m.imports[1].is_from);
        assert_eq!(m.imports[1].level, 1);
    }
}

mod parser {
    use pytdg::frontend::*;
    use pytdg::frontend::ast::*;
    use pytdg::frontend::parse_module;

    fn parse(src: &str) -> Vec<Stmt> {
        parse_module(src, "t.py").unwrap().body
    }

    #[test]
    fn precedence() {
        let e = parse_expression("a + b * c").unwrap();
        match e.kind {
            ExprKind::BinOp { op: BinOp::Add, right, .. } => {
                assert!(matches!(right.kind, ExprKind::BinOp { op: BinOp::Mult, .. }))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn chained_comparison_and_not_in() {
        let e = parse_expression("a < b not in c").unwrap();
        match e.kind {
            ExprKind::Compare { ops, .. } => assert_eq!(ops, [CmpOp::Lt, CmpOp::NotIn]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn comprehension_with_condition() {
        let e = parse_expression("[x for x in xs if x > 0]").unwrap();
        match e.kind {
            ExprKind::ListComp { generators, .. } => assert_eq!(generators[0].ifs.len(), 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ternary_and_lambda() {
        let e = parse_expression("lambda x, y=1: x if y else 0").unwrap();
        assert!(matches!(e.kind, ExprKind::Lambda { .. }));
    }

    #[test]
    fn dict_and_set_literals() {
        assert!(matches!(
            parse_expression("{1: 2, **d}").unwrap().kind,
            ExprKind::Dict { .. }
        ));
        assert!(matches!(
            parse_expression("{1, 2}").unwrap().kind,
            ExprKind::Set(_)
        ));
        assert!(matches!(
            parse_expression("{k: v for k, v in xs}").unwrap().kind,
            ExprKind::DictComp { .. }
        ));
    }

    #[test]
    fn fstring_embeds_names() {
        let e = parse_expression("f'{a!r} and {b:>{width}} {{literal}}'").unwrap();
        match e.kind {
            ExprKind::JoinedStr(values) => {
                let names: Vec<_> = values.iter().filter_map(|v| v.as_name()).collect();
                assert_eq!(names, ["a", "b", "width"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn statements_roundup() {
        let src = "\
import os.path as p, sys
from .pkg import (A as B, C,)
@dec
class K(Base, metaclass=M):
    x: int = 1
    def m(self, a, *args, b=2, **kw) -> None:
        for i, j in enumerate(a):
            if i:
                continue
            elif j:
                break
            else:
                pass
        while True:
            x += 1
        try:
            raise ValueError('x') from None
        except (A, B) as e:
            del e
        finally:
            pass
        with open(p) as f, g:
            yield f
        return
";
        let stmts = parse(src);
        assert_eq!(stmts.len(), 3);
    }

    #[test]
    fn opaque_statement_inside_function() {
        let src = "def f():\n    x = 1\n    match x:\n        case 1:\n            pass\n    return x\n";
        let stmts = parse(src);
        let StmtKind::FunctionDef(f) = &stmts[0].kind else {
            panic!()
        };
        assert_eq!(f.body.len(), 3);
        assert!(matches!(f.body[1].kind, StmtKind::Opaque(_)));
        assert!(matches!(f.body[2].kind, StmtKind::Return(Some(_))));
    }

    #[test]
    fn error_at_top_level_fails() {
        let err = parse_module("x = = 1\n", "t.py").unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn invalid_assignment_target() {
        assert!(parse_module("f() = 1\n", "t.py").is_err());
    }

    #[test]
    fn slices_and_subscripts() {
        let e = parse_expression("a[1:2, ::3][k]").unwrap();
        assert!(matches!(e.kind, ExprKind::Subscript { .. }));
    }

    #[test]
    fn spans_of_expression_fragment() {
        let e = parse_expression("List[int]").unwrap();
        assert_eq!((e.span.start, e.span.end), (0, 9));
    }
}

mod imports {
    use pytdg::frontend::imports::*;
    use pytdg::frontend::ast::*;
    use pytdg::frontend::parse_module;

    fn module(src: &str) -> ModuleAst {
        parse_module(src, "m.py").unwrap()
    }

    #[test]
    fn local_class_collected() {
        let set = collect_user_types(&module("class Placeholder:\n    pass\n"), &[]);
        assert!(set.contains("Placeholder"));
    }

    #[test]
    fn unresolvable_from_import_kept_by_name() {
        let set = collect_user_types(&module("from pkg import Node\n"), &[]);
        let info = &set.entries["Node"];
        assert_eq!(info.origin, None);
        assert!(!info.overloads_operators);
    }

    #[test]
    fn empty_module() {
        assert!(collect_user_types(&module(""), &[]).is_empty());
    }

    #[test]
    fn overloading_detection() {
        let m = module(
            "class V:\n    def __add__(self, o): pass\nclass P:\n    def __init__(self): pass\n    def run(self): pass\nclass S:\n    def __lshift__(self, o): pass\n",
        );
        let flags: Vec<_> = m.classes.iter().map(detect_operator_overloading).collect();
        assert_eq!(flags, [true, false, true]);
    }

    #[test]
    fn resolves_package_sources() {
        let dir = tempfile::tempdir().unwrap();
        let pkg = dir.path().join("geo");
        std::fs::create_dir(&pkg).unwrap();
        std::fs::write(pkg.join("__init__.py"), "").unwrap();
        std::fs::write(
            pkg.join("vec.py"),
            "from typing import NamedTuple\nclass Vec:\n    def __mul__(self, k): pass\nclass Pt(NamedTuple):\n    x: int\nPair = namedtuple('Pair', 'a b')\n",
        )
        .unwrap();
        let m = module("import geo as g\nfrom geo.vec import Vec\n");
        let set = collect_user_types(&m, &[dir.path().to_path_buf()]);
        assert!(set.overloads("Vec"));
        assert!(set.contains("Pt"));
        assert!(set.contains("Pair"));
        assert!(set.contains("g.Vec"));
        assert!(set.entries["Vec"].origin.is_some());
    }

    #[test]
    fn idempotent() {
        let m = module("class A:\n    pass\nfrom x import B, c\nimport os\n");
        assert_eq!(collect_user_types(&m, &[]), collect_user_types(&m, &[]));
    }
}
