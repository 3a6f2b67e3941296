use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use proptest::prelude::*;
use pytdg::frontend::SlotKind;
use pytdg::recommend::skipgram::{identifier_tokens, train, SkipGramConfig};
use pytdg::recommend::{
    correct_type, naive_recommend, subtokenize, BpeMerges, Embedding, FileRecommender, FrequencyTable,
    LexicalEmbedding, NaiveMode, Recommendation, RecommendError, Recommender, SidecarRecommender, SlotRequest,
    VectorEmbedding,
};

fn toks(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn req(function: &str, kind: SlotKind, name: &str, k: usize) -> SlotRequest {
    SlotRequest {
        file: "t.py".into(),
        function: function.into(),
        kind,
        name: name.into(),
        k,
        context: vec![function.into(), name.into()],
    }
}

fn table() -> FrequencyTable {
    FrequencyTable::new([
        ("str".to_string(), 100),
        ("int".to_string(), 90),
        ("bool".to_string(), 40),
        ("List[str]".to_string(), 30),
        ("float".to_string(), 20),
    ])
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

// ---- subtokens and similarity ----

#[test]
fn subtokenize_examples() {
    assert_eq!(subtokenize("AbstractNode", None), ["abstract", "node"]);
    assert_eq!(subtokenize("snake_case_name", None), ["snake", "case", "name"]);
    assert_eq!(subtokenize("x", None), ["x"]);
    assert_eq!(subtokenize("HTTPRequest", None), ["http", "request"]);
}

#[test]
fn bpe_segments_unknown_tokens_only() {
    let bpe = BpeMerges::parse("n o\nno d\nnod e\n");
    assert_eq!(subtokenize("node", Some(&bpe)), ["node"]);
    let pieces = subtokenize("nodex", Some(&bpe));
    assert_eq!(pieces.concat(), "nodex");
    assert!(pieces.len() > 1, "{pieces:?}");
}

#[test]
fn lexical_similarity_examples() {
    let e = LexicalEmbedding;
    assert_eq!(e.similarity(&toks(&["node"]), &toks(&["node"])), 1.0);
    assert_eq!(e.similarity(&toks(&["http"]), &toks(&["node"])), 0.0);
    let near = e.similarity(&toks(&["node"]), &toks(&["abstract", "node"]));
    let far = e.similarity(&toks(&["node"]), &toks(&["http", "request"]));
    assert!(near > far, "{near} <= {far}");
}

proptest! {
    #[test]
    fn similarity_is_symmetric_and_bounded(
        a in prop::collection::vec("[a-z]{1,6}", 1..4),
        b in prop::collection::vec("[a-z]{1,6}", 1..4),
    ) {
        let e = LexicalEmbedding;
        let ab = e.similarity(&a, &b);
        let ba = e.similarity(&b, &a);
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((e.similarity(&a, &a) - 1.0).abs() < 1e-12);
    }
}

// ---- type correction ----

#[test]
fn correct_type_examples() {
    let e = LexicalEmbedding;
    let s = toks(&["Placeholder", "HTTPRequest"]);
    assert_eq!(correct_type("x", &s, "int", -0.1, &e, None), "int");
    assert_eq!(correct_type("x", &toks(&["Placeholder"]), "Placeholder", -0.1, &e, None), "Placeholder");
    assert_eq!(correct_type("node", &s, "PlaceHolderr", -0.1, &e, None), "Placeholder");
    assert_eq!(correct_type("node", &[], "PlaceHolderr", -0.1, &e, None), "PlaceHolderr");
}

/// Independent replay of the correction scan: keep the best of type-to-type
/// similarity and penalized name-to-type similarity, but record the
/// unpenalized value when the name wins.
fn correction_oracle(name: &str, valid: &[String], t: &str, penalty: f64) -> String {
    let e = LexicalEmbedding;
    let tt = subtokenize(t, None);
    let nt = subtokenize(name, None);
    let mut best = t.to_string();
    let mut largest = 0.0;
    for pt in valid {
        let pk = subtokenize(pt, None);
        let s1 = e.similarity(&pk, &tt);
        let s2 = e.similarity(&pk, &nt);
        if s1 > largest {
            largest = s1;
            best = pt.clone();
        }
        if s2 + penalty > largest {
            largest = s2;
            best = pt.clone();
        }
    }
    best
}

#[test]
fn correct_type_matches_scan_oracle() {
    let valid = toks(&["Placeholder", "HTTPRequest", "AbstractNode", "TreeVisitor"]);
    let cases = [
        ("node", "PlaceHolderr"),
        ("visitor", "Visiter"),
        ("request", "HttpReq"),
        ("root", "AbstractNodes"),
        ("label", "Placeholderz"),
    ];
    for (name, t) in cases {
        assert_eq!(
            correct_type(name, &valid, t, -0.1, &LexicalEmbedding, None),
            correction_oracle(name, &valid, t, -0.1),
            "{name} {t}"
        );
    }
}

proptest! {
    #[test]
    fn correct_type_is_identity_on_valid_types(
        name in "[a-z]{1,8}",
        valid in prop::collection::btree_set("[A-Z][a-z]{2,6}", 1..6),
        pick in 0usize..6,
        penalty in -0.5f64..0.0,
    ) {
        let valid: Vec<String> = valid.into_iter().collect();
        let t = valid[pick % valid.len()].clone();
        prop_assert_eq!(correct_type(&name, &valid, &t, penalty, &LexicalEmbedding, None), t);
    }

    #[test]
    fn correct_type_stays_in_valid_set(
        name in "[a-z]{1,8}",
        valid in prop::collection::btree_set("[A-Z][a-z]{2,6}", 1..6),
        t in "[A-Z][a-z]{2,8}",
    ) {
        let valid: Vec<String> = valid.into_iter().collect();
        let out = correct_type(&name, &valid, &t, -0.1, &LexicalEmbedding, None);
        prop_assert!(valid.contains(&out) || out == t);
    }
}

// ---- naive baseline ----

#[test]
fn naive_deterministic_takes_table_order() {
    let r = naive_recommend("f:argument:x", 1, &table(), NaiveMode::Deterministic);
    assert_eq!(r.candidates[0].0, "str");
    let r = naive_recommend("f:argument:x", 3, &table(), NaiveMode::Deterministic);
    let names: Vec<&str> = r.candidates.iter().map(|c| c.0.as_str()).collect();
    assert_eq!(names, ["str", "int", "bool"]);
    assert!((r.candidates[0].1 - 100.0 / 280.0).abs() < 1e-12);
    assert!(r.candidates.windows(2).all(|w| w[0].1 >= w[1].1));
}

#[test]
fn naive_uses_only_top_ten() {
    let t = FrequencyTable::new((0..20).map(|i| (format!("T{i:02}"), 100 - i as u64)));
    for seed in 0..200 {
        let r = naive_recommend(&format!("s{seed}"), 5, &t, NaiveMode::Sampling { seed });
        for (name, _) in &r.candidates {
            let i: usize = name[1..].parse().unwrap();
            assert!(i < 10, "{name}");
        }
    }
}

#[test]
fn naive_sampling_follows_table_proportions() {
    let t = table();
    let total: u64 = t.entries().iter().map(|e| e.1).sum();
    for seed in [7u64, 12345] {
        let mut hits: BTreeMap<String, usize> = BTreeMap::new();
        let n = 10_000;
        for i in 0..n {
            let r = naive_recommend(&format!("slot{i}"), 1, &t, NaiveMode::Sampling { seed });
            *hits.entry(r.candidates[0].0.clone()).or_insert(0) += 1;
        }
        for (ty, count) in t.entries() {
            let want = *count as f64 / total as f64;
            let got = hits.get(ty).copied().unwrap_or(0) as f64 / n as f64;
            assert!((got - want).abs() < 0.02, "seed {seed} {ty}: {got} vs {want}");
        }
    }
}

#[test]
fn naive_sampling_is_seeded_and_distinct() {
    let t = table();
    let a = naive_recommend("s", 3, &t, NaiveMode::Sampling { seed: 1 });
    let b = naive_recommend("s", 3, &t, NaiveMode::Sampling { seed: 1 });
    assert_eq!(a, b);
    let names: std::collections::BTreeSet<&str> = a.candidates.iter().map(|c| c.0.as_str()).collect();
    assert_eq!(names.len(), 3);
}

#[test]
fn frequency_table_orders_by_count_then_name() {
    let t = FrequencyTable::parse("int 5\nstr 9\nList[int] 5\n").unwrap();
    let names: Vec<&str> = t.entries().iter().map(|e| e.0.as_str()).collect();
    assert_eq!(names, ["str", "List[int]", "int"]);
    let j = FrequencyTable::parse(r#"[["int", 5], ["str", 9]]"#).unwrap();
    assert_eq!(j.entries()[0].0, "str");
}

// ---- file and sidecar backends ----

fn predictions() -> BTreeMap<String, Vec<String>> {
    [
        ("f:arg:text", vec!["str", "int"]),
        ("f:return:", vec!["List[int]"]),
        ("g:local:x", vec!["float", "int", "str"]),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.into_iter().map(String::from).collect()))
    .collect()
}

fn requests() -> Vec<SlotRequest> {
    vec![
        req("f", SlotKind::Argument, "text", 1),
        req("f", SlotKind::Return, "", 3),
        req("g", SlotKind::Local, "x", 2),
        req("h", SlotKind::Argument, "y", 1),
    ]
}

#[test]
fn file_backend_examples() {
    let rec = FileRecommender::new(predictions());
    let out = rec.recommend_batch(&requests());
    assert_eq!(out[0].candidates, [("str".to_string(), 1.0)]);
    assert_eq!(out[1].candidates.len(), 1);
    assert_eq!(out[2].candidates.len(), 2);
    assert!(out[3].candidates.is_empty());
    assert_eq!(out[3], Recommendation::empty("h:argument:y"));
}

fn sidecar(mode: &str) -> (SidecarRecommender, tempfile::NamedTempFile) {
    let table = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(table.path(), serde_json::to_string(&predictions()).unwrap()).unwrap();
    let cmd = format!(
        "python3 {} {} {mode}",
        fixture("echo_sidecar.py").display(),
        table.path().display()
    );
    (SidecarRecommender::new(cmd).with_timeout(Duration::from_secs(10)), table)
}

#[test]
fn sidecar_matches_file_backend() {
    let file = FileRecommender::new(predictions()).recommend_batch(&requests());
    let (sc, _t) = sidecar("normal");
    assert_eq!(sc.recommend_batch(&requests()), file);
    // The connection is reused for a second batch with fresh ids.
    assert_eq!(sc.recommend_batch(&requests()), file);
    assert!(sc.errors().is_empty(), "{:?}", sc.errors());
}

#[test]
fn sidecar_matches_responses_out_of_order() {
    let file = FileRecommender::new(predictions()).recommend_batch(&requests());
    let (sc, _t) = sidecar("reverse");
    assert_eq!(sc.recommend_batch(&requests()), file);
}

#[test]
fn sidecar_skips_malformed_and_stray_lines() {
    let file = FileRecommender::new(predictions()).recommend_batch(&requests());
    let (sc, _t) = sidecar("noisy");
    assert_eq!(sc.recommend_batch(&requests()), file);
    let errs = sc.errors();
    // Two junk lines per request, as the script answers line by line.
    assert_eq!(errs.len(), 2 * requests().len(), "{errs:?}");
    assert!(errs.iter().all(|e| matches!(e, RecommendError::ProtocolError(_))));
}

#[test]
fn sidecar_exit_degrades_to_empty() {
    let (sc, _t) = sidecar("exit");
    let out = sc.recommend_batch(&requests());
    assert!(out.iter().all(|r| r.candidates.is_empty()));
    assert!(matches!(sc.errors()[0], RecommendError::SidecarUnavailable(_)));
}

#[test]
fn sidecar_timeout_degrades_to_empty() {
    let (sc, _t) = sidecar("silent");
    let sc = sc.with_timeout(Duration::from_millis(300));
    let out = sc.recommend_batch(&requests());
    assert!(out.iter().all(|r| r.candidates.is_empty()));
    assert!(matches!(sc.errors()[0], RecommendError::SidecarUnavailable(_)));
}

#[test]
fn sidecar_spawn_failure_degrades_to_empty() {
    let sc = SidecarRecommender::new("exec /nonexistent/recommender").with_timeout(Duration::from_secs(5));
    let out = sc.recommend_batch(&requests()[..1]);
    assert!(out[0].candidates.is_empty());
    assert!(!sc.errors().is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn sidecar_round_trips_arbitrary_names(
        names in prop::collection::vec("[a-zA-Z_][a-zA-Z0-9_]{0,8}", 1..6),
        types in prop::collection::vec("(int|str|List\\[int\\]|Dict\\[str, float\\])", 1..4),
    ) {
        let preds: BTreeMap<String, Vec<String>> =
            names.iter().map(|n| (format!("f:arg:{n}"), types.clone())).collect();
        let table = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(table.path(), serde_json::to_string(&preds).unwrap()).unwrap();
        let cmd = format!("python3 {} {}", fixture("echo_sidecar.py").display(), table.path().display());
        let sc = SidecarRecommender::new(cmd).with_timeout(Duration::from_secs(10));
        let reqs: Vec<SlotRequest> = names.iter().map(|n| req("f", SlotKind::Argument, n, 5)).collect();
        prop_assert_eq!(sc.recommend_batch(&reqs), FileRecommender::new(preds).recommend_batch(&reqs));
    }
}

// ---- embeddings ----

#[test]
fn skipgram_is_deterministic_and_round_trips() {
    let src = "def load_node(node_id):\n    node = nodes[node_id]\n    return node\n";
    let corpus = vec![identifier_tokens(src); 3];
    let cfg = SkipGramConfig {
        dim: 16,
        epochs: 3,
        ..SkipGramConfig::default()
    };
    let a = train(&corpus, &cfg);
    let b = train(&corpus, &cfg);
    assert_eq!(a.to_text(), b.to_text());
    assert!(a.vectors.contains_key("node"));
    assert!(a.vectors.values().all(|v| v.len() == 16));
    let back = VectorEmbedding::parse(&a.to_text()).unwrap();
    assert_eq!(back.to_text(), a.to_text());
    let s = back.similarity(&toks(&["node"]), &toks(&["node", "id"]));
    assert!((0.0..=1.0).contains(&s));
}

#[test]
fn vector_embedding_falls_back_when_tokens_unknown() {
    let e = VectorEmbedding::parse("1 2\nnode 1 0\n").unwrap();
    let unknown = e.similarity(&toks(&["http"]), &toks(&["request"]));
    assert_eq!(unknown, LexicalEmbedding.similarity(&toks(&["http"]), &toks(&["request"])));
}
