mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::typegen::random_pair;
use proptest::prelude::*;
use pytdg::eval::{evaluate, exact_match, match_to_parametric, predictions_for, Report, DEFAULT_KS};
use pytdg::frontend::{GroundTruthRecord, SlotKind};
use pytdg::types::parse_type_lenient;

fn rec(function: &str, kind: SlotKind, name: &str, annotation: &str) -> GroundTruthRecord {
    GroundTruthRecord {
        function: function.into(),
        kind,
        name: name.into(),
        annotation: annotation.into(),
        line: 0,
    }
}

fn preds(pairs: &[(&str, &[&str])]) -> BTreeMap<String, Vec<String>> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
        .collect()
}

fn run(p: &BTreeMap<String, Vec<String>>, truths: &[GroundTruthRecord], threshold: f64) -> Report {
    evaluate(p, truths, &DEFAULT_KS, threshold, &BTreeSet::from(["Zebra".to_string()]))
}

fn pair(a: &str, b: &str) -> (bool, bool) {
    let (a, b) = (parse_type_lenient(a), parse_type_lenient(b));
    (exact_match(&a, &b), match_to_parametric(&a, &b))
}

#[test]
fn metric_examples() {
    assert_eq!(pair("List[int]", "List[int]"), (true, true));
    assert_eq!(pair("List[int]", "List[str]"), (false, true));
    assert_eq!(pair("Optional[str]", "Union[str, None]"), (true, true));
    assert_eq!(pair("int", "str"), (false, false));
    assert_eq!(pair("Dict[str,int]", "Dict"), (false, true));
    assert_eq!(pair("Optional[List[int]]", "List[str]"), (false, false));
}

#[test]
fn single_slot_scores_one_everywhere() {
    let r = run(&preds(&[("f:argument:x", &["int"])]), &[rec("f", SlotKind::Argument, "x", "int")], 0.001);
    let all = r.row("all").unwrap();
    assert_eq!(all.count, 1);
    for k in DEFAULT_KS {
        assert_eq!(all.exact[&k], 1.0);
        assert_eq!(all.parametric[&k], 1.0);
    }
    assert_eq!(r.row("argument").unwrap().count, 1);
    assert!(r.row("return").is_none());
}

#[test]
fn rank_decides_top_k() {
    let r = run(&preds(&[("f:argument:x", &["str", "int"])]), &[rec("f", SlotKind::Argument, "x", "int")], 0.001);
    let all = r.row("all").unwrap();
    assert_eq!(all.exact[&1], 0.0);
    assert_eq!(all.exact[&3], 1.0);
    assert_eq!(all.exact[&5], 1.0);
}

#[test]
fn rare_bucket_follows_threshold() {
    let mut truths: Vec<GroundTruthRecord> =
        (0..9).map(|i| rec("f", SlotKind::Local, &format!("v{i}"), "int")).collect();
    truths.push(rec("f", SlotKind::Local, "z", "Zebra"));
    let p = BTreeMap::new();
    // 1 in 10 is 0.1: above 0.001, below 0.2.
    let loose = run(&p, &truths, 0.001);
    assert!(loose.row("rare").is_none());
    assert_eq!(loose.row("common").unwrap().count, 10);
    let strict = run(&p, &truths, 0.2);
    assert_eq!(strict.row("rare").unwrap().count, 1);
    assert_eq!(strict.row("common").unwrap().count, 9);
    assert_eq!(strict.row("user").unwrap().count, 1);
}

#[test]
fn missing_predictions_are_misses() {
    let truths = [rec("f", SlotKind::Argument, "x", "int"), rec("f", SlotKind::Return, "", "str")];
    let r = run(&preds(&[("f:argument:x", &["int"]), ("g:argument:y", &["int"])]), &truths, 0.001);
    assert_eq!(r.row("all").unwrap().exact[&5], 0.5);
    assert_eq!(r.missing, ["f:return:"]);
    assert_eq!(r.unmatched, ["g:argument:y"]);
    assert!(r.to_table().contains("1 slots had no prediction"));
}

#[test]
fn solved_unions_rank_whole_then_members() {
    let src = "def f(flag):\n    v = 1 if flag else 'a'\n    return v\n";
    let s = common::setup(src, pytdg::rules::StubTable::builtin());
    let (results, _) = common::infer(&s, &pytdg::recommend::NullRecommender);
    let p = predictions_for(&results, &[rec("f", SlotKind::Return, "", "int")]);
    assert_eq!(p["f:return:"], ["Union[int, str]", "int", "str"]);
}

fn random_records() -> impl Strategy<Value = (Vec<GroundTruthRecord>, BTreeMap<String, Vec<String>>)> {
    let ty = prop::sample::select(vec!["int", "str", "List[int]", "List[str]", "Dict[str, int]", "Zebra", "None"]);
    prop::collection::vec((ty.clone(), prop::collection::vec(ty, 0..6)), 1..20).prop_map(|rows| {
        let mut truths = Vec::new();
        let mut preds = BTreeMap::new();
        for (i, (truth, ranked)) in rows.into_iter().enumerate() {
            let name = format!("v{i}");
            preds.insert(format!("f:local:{name}"), ranked.into_iter().map(String::from).collect());
            truths.push(rec("f", SlotKind::Local, &name, truth));
        }
        (truths, preds)
    })
}

proptest! {
    #[test]
    fn evaluate_ignores_record_order((truths, p) in random_records(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = truths.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(run(&p, &truths, 0.1), run(&p, &shuffled, 0.1));
    }

    #[test]
    fn hit_rate_grows_with_k((truths, p) in random_records()) {
        let r = run(&p, &truths, 0.1);
        for cell in r.rows.values() {
            for m in [&cell.exact, &cell.parametric] {
                prop_assert!(m[&1] <= m[&3] && m[&3] <= m[&5]);
                prop_assert!(m.values().all(|f| (0.0..=1.0).contains(f)));
            }
            for k in DEFAULT_KS {
                prop_assert!(cell.exact[&k] <= cell.parametric[&k]);
            }
        }
    }

    #[test]
    fn exact_implies_parametric(seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = random_pair(&mut r);
        let (a, b) = (parse_type_lenient(&a), parse_type_lenient(&b));
        prop_assert!(!exact_match(&a, &b) || match_to_parametric(&a, &b));
    }
}
