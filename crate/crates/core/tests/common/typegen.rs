//! Random type annotations, as text, for metric properties.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const LEAVES: [&str; 9] = ["int", "str", "float", "bool", "None", "bytes", "Point", "Node", "Any"];

pub fn random_type(rng: &mut ChaCha8Rng, depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.4) {
        return LEAVES.choose(rng).unwrap().to_string();
    }
    let sub = |n: usize, rng: &mut ChaCha8Rng| -> Vec<String> { (0..n).map(|_| random_type(rng, depth - 1)).collect() };
    match rng.gen_range(0..7) {
        0 => format!("List[{}]", sub(1, rng)[0]),
        1 => format!("Set[{}]", sub(1, rng)[0]),
        2 => format!("Dict[{}]", sub(2, rng).join(", ")),
        3 => {
            let n = rng.gen_range(1..=3);
            format!("Tuple[{}]", sub(n, rng).join(", "))
        }
        4 => format!("Optional[{}]", sub(1, rng)[0]),
        5 => {
            let n = rng.gen_range(2..=3);
            format!("Union[{}]", sub(n, rng).join(", "))
        }
        _ => ["List", "Dict", "Tuple", "Set"].choose(rng).unwrap().to_string(),
    }
}

/// The same type written differently: union members reordered and
/// `Optional[X]` spelled out.
pub fn respell(t: &str) -> String {
    if let Some(inner) = t.strip_prefix("Optional[").and_then(|s| s.strip_suffix(']')) {
        return format!("Union[None, {inner}]");
    }
    t.to_string()
}

/// A pair that is identical, respelled, or independent, in about equal parts.
pub fn random_pair(rng: &mut ChaCha8Rng) -> (String, String) {
    let a = random_type(rng, 3);
    let b = match rng.gen_range(0..3) {
        0 => a.clone(),
        1 => respell(&a),
        _ => random_type(rng, 3),
    };
    (a, b)
}
