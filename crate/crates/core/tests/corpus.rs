mod common;

#[test]
fn static_corpus_is_solved_exactly() {
    let o = common::run_static_corpus();
    assert!(o.functions >= 20, "only {} functions", o.functions);
    assert!(o.wrong.is_empty(), "{:#?}", o.wrong);
    assert_eq!(o.exact, o.forced);
}

#[test]
fn static_corpus_leaves_no_rule_violated() {
    let o = common::run_static_corpus();
    assert!(o.violations.is_empty(), "{:#?}", o.violations);
}

#[test]
fn static_corpus_covers_every_rule() {
    let o = common::run_static_corpus();
    assert!(o.uncovered.is_empty(), "not exercised: {:?}", o.uncovered);
}

#[test]
fn unforced_slots_stay_blank() {
    let o = common::run_static_corpus();
    assert!(o.unforced_typed.is_empty(), "{:?}", o.unforced_typed);
}
