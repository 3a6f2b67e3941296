use std::collections::BTreeSet;

use proptest::prelude::*;
use pytdg::types::{
    intersect, more_precise, parse_type_expr, Atom, CandidateSet, Ctor, Elem, PyType, ValidTypeSpec, DEPTH_CAP,
};

fn leaf() -> impl Strategy<Value = PyType> {
    prop_oneof![
        prop::sample::select(Elem::ALL.to_vec()).prop_map(PyType::Elementary),
        Just(PyType::NoneType),
        prop::sample::select(vec!["Point", "Node", "Zebra"]).prop_map(PyType::user),
        prop::sample::select(vec![Ctor::List, Ctor::Dict, Ctor::Set, Ctor::Tuple]).prop_map(PyType::bare),
    ]
}

fn py_type() -> impl Strategy<Value = PyType> {
    leaf().prop_recursive(DEPTH_CAP as u32 - 1, 32, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| PyType::generic(Ctor::List, vec![t])),
            inner.clone().prop_map(|t| PyType::generic(Ctor::Set, vec![t])),
            (inner.clone(), inner.clone()).prop_map(|(k, v)| PyType::generic(Ctor::Dict, vec![k, v])),
            prop::collection::vec(inner.clone(), 1..=3).prop_map(|p| PyType::generic(Ctor::Tuple, p)),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(PyType::union),
            (prop::collection::vec(inner.clone(), 0..=2), inner).prop_map(|(a, r)| PyType::callable(a, r)),
        ]
    })
}

fn atom() -> impl Strategy<Value = Atom> {
    prop_oneof![
        Just(Atom::AnyElementary),
        Just(Atom::AnyGeneric),
        Just(Atom::AnyUser),
        Just(Atom::AnyOverloading),
        prop::sample::select(Ctor::ALL.to_vec()).prop_map(Atom::Ctor),
        leaf().prop_map(Atom::Exact),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn render_then_parse_is_identity(t in py_type()) {
        let n = t.normalized();
        prop_assume!(n.depth() <= DEPTH_CAP);
        let text = n.to_string();
        let back = parse_type_expr(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        prop_assert_eq!(back.normalized(), n, "{}", text);
    }
}

proptest! {
    #[test]
    fn normalization_is_idempotent(t in py_type()) {
        let once = t.normalized();
        prop_assert_eq!(once.clone().normalized(), once);
    }

    #[test]
    fn intersect_is_idempotent_and_shrinks(
        types in prop::collection::btree_set(py_type(), 0..6),
        atoms in prop::collection::vec(atom(), 0..4),
    ) {
        let c = CandidateSet::inferred(types);
        let s = ValidTypeSpec::new(atoms);
        let once = intersect(&c, &s);
        prop_assert_eq!(intersect(&once, &s), once.clone());
        prop_assert!(once.len() <= c.len());
        prop_assert!(once.types.is_subset(&c.types));
    }

    #[test]
    fn nested_unions_flatten(a in py_type(), b in py_type(), c in py_type()) {
        let nested = PyType::union([a.clone(), PyType::union([b.clone(), c.clone()])]).normalized();
        let flat = PyType::union([a, b, c]).normalized();
        prop_assert_eq!(nested, flat);
    }

    #[test]
    fn erasure_forgets_parameters(t in py_type()) {
        let e = t.normalized().erased();
        prop_assert!(e.members().iter().all(|m| m.params().is_empty()));
    }
}

#[test]
fn more_precise_is_commutative_and_associative() {
    let nums = [PyType::BOOL, PyType::INT, PyType::FLOAT];
    for a in &nums {
        for b in &nums {
            assert_eq!(more_precise(a, b).unwrap(), more_precise(b, a).unwrap());
            for c in &nums {
                let l = more_precise(&more_precise(a, b).unwrap(), c).unwrap();
                let r = more_precise(a, &more_precise(b, c).unwrap()).unwrap();
                assert_eq!(l, r);
            }
        }
    }
    assert_eq!(more_precise(&PyType::BOOL, &PyType::FLOAT).unwrap(), PyType::FLOAT);
    assert!(more_precise(&PyType::STR, &PyType::INT).is_err());
}

#[test]
fn optional_round_trips_through_union() {
    let t = parse_type_expr("Optional[str]").unwrap().normalized();
    assert_eq!(t, parse_type_expr("Union[str, None]").unwrap().normalized());
    assert_eq!(t.to_string(), "Optional[str]");
}

#[test]
fn nested_return_renders_heterogeneous_containers() {
    let text = "Tuple[List[int, Placeholder], Dict[str, Placeholder]]";
    let t = parse_type_expr(text).unwrap();
    assert_eq!(t.to_string(), text);
    let set: BTreeSet<PyType> = [PyType::INT, PyType::user("Placeholder")].into();
    assert_eq!(CandidateSet::inferred(set).render().unwrap(), "Union[int, Placeholder]");
}

mod examples {
    use pytdg::types::*;

    fn t(s: &str) -> PyType {
        parse_type_expr(s).unwrap()
    }

    #[test]
    fn table_row_round_trip() {
        let s = "Tuple[List[int, Placeholder], Dict[str, Placeholder]]";
        let ty = t(s);
        assert_eq!(
            ty,
            PyType::Generic(
                Ctor::Tuple,
                vec![
                    PyType::Generic(Ctor::List, vec![PyType::INT, PyType::user("Placeholder")]),
                    PyType::Generic(Ctor::Dict, vec![PyType::STR, PyType::user("Placeholder")]),
                ]
            )
        );
        assert_eq!(ty.render(), s);
    }

    #[test]
    fn optional_sugar() {
        let ty = t("Optional[str]");
        assert_eq!(ty, PyType::Generic(Ctor::Union, vec![PyType::STR, PyType::NoneType]));
        assert_eq!(ty.render(), "Optional[str]");
        assert_eq!(t("Union[None, str]"), ty);
        assert_eq!(t("str | None"), ty);
    }

    #[test]
    fn elementary_round_trip() {
        assert_eq!(t("int"), PyType::INT);
        assert_eq!(PyType::INT.render(), "int");
    }

    #[test]
    fn union_flattening() {
        assert_eq!(t("Union[int, Union[str, bool]]"), t("Union[bool, int, str]"));
        assert_eq!(t("Union[int, int]"), PyType::INT);
    }

    #[test]
    fn callable_forms() {
        assert_eq!(t("Callable[[int], str]").render(), "Callable[[int], str]");
        assert_eq!(t("Callable[[], None]").render(), "Callable[[], None]");
        assert!(parse_type_expr("Callable[int]").is_err());
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_type_expr("List[int") {
            Err(TypeError::TypeParseError { position, .. }) => assert_eq!(position, 8),
            other => panic!("{other:?}"),
        }
        assert!(parse_type_expr("Iterable[int]").is_err());
        assert_eq!(parse_type_lenient("Iterable[ int ]"), PyType::user("Iterable[int]"));
    }

    #[test]
    fn whitespace_insensitive_case_sensitive() {
        assert_eq!(t("List[ int ]"), t("List[int]"));
        assert_ne!(t("node"), t("Node"));
    }

    #[test]
    fn depth_cap_truncates() {
        let deep = t("List[List[List[List[List[List[List[int]]]]]]]");
        assert_eq!(deep.depth(), DEPTH_CAP);
        assert_eq!(deep.render(), "List[List[List[List[List[List]]]]]");
    }

    #[test]
    fn intersect_examples() {
        let c = CandidateSet::inferred([PyType::INT, PyType::STR]);
        let spec = ValidTypeSpec::new([
            Atom::Exact(PyType::BOOL),
            Atom::Exact(PyType::INT),
            Atom::Exact(PyType::FLOAT),
            Atom::AnyOverloading,
        ]);
        assert_eq!(intersect(&c, &spec).types, [PyType::INT].into());

        let c = CandidateSet::inferred([t("List[int]")]);
        let spec = ValidTypeSpec::new([
            Atom::AnyGeneric,
            Atom::Exact(PyType::STR),
            Atom::Exact(PyType::BYTES),
        ]);
        assert_eq!(intersect(&c, &spec).types, [t("List[int]")].into());

        let vec_t = PyType::user_overloading("Vec");
        let c = CandidateSet::inferred([vec_t.clone()]);
        let spec = ValidTypeSpec::new([
            Atom::AnyElementary,
            Atom::Ctor(Ctor::List),
            Atom::Ctor(Ctor::Tuple),
            Atom::AnyOverloading,
        ]);
        assert_eq!(intersect(&c, &spec).types, [vec_t].into());
    }

    #[test]
    fn more_precise_examples() {
        assert_eq!(more_precise(&PyType::INT, &PyType::FLOAT).unwrap(), PyType::FLOAT);
        assert_eq!(more_precise(&PyType::BOOL, &PyType::INT).unwrap(), PyType::INT);
        assert_eq!(more_precise(&PyType::INT, &PyType::INT).unwrap(), PyType::INT);
        assert!(more_precise(&PyType::STR, &PyType::INT).is_err());
        let o = PyType::user_overloading("Vec");
        assert_eq!(more_precise(&PyType::FLOAT, &o).unwrap(), o);
    }

    #[test]
    fn projections() {
        assert_eq!(element_type(&t("List[int]")).unwrap(), [PyType::INT].into());
        assert_eq!(
            element_type(&t("Tuple[int, Placeholder]")).unwrap(),
            [PyType::INT, PyType::user("Placeholder")].into()
        );
        assert_eq!(element_type(&t("Dict[str, int]")).unwrap(), [PyType::STR].into());
        assert_eq!(element_type(&PyType::BYTES).unwrap(), [PyType::INT].into());
        assert!(element_type(&PyType::INT).is_err());
        assert_eq!(
            value_type(&t("Dict[str, Placeholder]")).unwrap(),
            [PyType::user("Placeholder")].into()
        );
        assert_eq!(
            value_type(&t("Dict[int, Union[int, str]]")).unwrap(),
            [t("Union[int, str]")].into()
        );
        assert!(matches!(value_type(&t("List[int]")), Err(TypeError::NotADict(_))));
        assert_eq!(return_type(&t("Callable[[int], str]")).unwrap(), [PyType::STR].into());
        assert_eq!(
            return_type(&t("Callable[[], None]")).unwrap(),
            [PyType::NoneType].into()
        );
        assert!(matches!(return_type(&PyType::INT), Err(TypeError::NotCallable(_))));
    }

    #[test]
    fn absorption_of_empty_literals() {
        let c = CandidateSet::inferred([PyType::bare(Ctor::List), t("List[int]"), PyType::bare(Ctor::Dict)]);
        assert_eq!(c.types, [t("List[int]"), PyType::bare(Ctor::Dict)].into());
    }

    #[test]
    fn erasure() {
        assert_eq!(t("Dict[str, List[int]]").erased(), t("Dict"));
        assert_eq!(t("Optional[List[int]]").erased(), t("Optional[List]"));
    }
}
