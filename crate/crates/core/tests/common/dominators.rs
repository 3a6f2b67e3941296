//! Dominators by the textbook set iteration, and random graphs to compare
//! against.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Dominator sets of every vertex reachable from `root`:
/// Dom(root) = {root}, Dom(v) = {v} ∪ ⋂ Dom(p) over reachable predecessors.
/// Unreachable vertices get `None`.
pub fn dominator_sets(n: usize, succ: &[Vec<usize>], root: usize) -> Vec<Option<BTreeSet<usize>>> {
    let mut reach = vec![false; n];
    let mut stack = vec![root];
    reach[root] = true;
    while let Some(v) = stack.pop() {
        for &w in &succ[v] {
            if !reach[w] {
                reach[w] = true;
                stack.push(w);
            }
        }
    }
    let mut pred = vec![Vec::new(); n];
    for (v, out) in succ.iter().enumerate() {
        for &w in out {
            pred[w].push(v);
        }
    }
    let all: BTreeSet<usize> = (0..n).filter(|&v| reach[v]).collect();
    let mut dom: Vec<Option<BTreeSet<usize>>> =
        (0..n).map(|v| reach[v].then(|| if v == root { [root].into() } else { all.clone() })).collect();
    loop {
        let mut changed = false;
        for v in 0..n {
            if v == root || !reach[v] {
                continue;
            }
            let mut acc: Option<BTreeSet<usize>> = None;
            for &p in &pred[v] {
                if let Some(d) = &dom[p] {
                    acc = Some(match acc {
                        None => d.clone(),
                        Some(a) => a.intersection(d).copied().collect(),
                    });
                }
            }
            let mut new = acc.unwrap_or_default();
            new.insert(v);
            if dom[v].as_ref() != Some(&new) {
                dom[v] = Some(new);
                changed = true;
            }
        }
        if !changed {
            return dom;
        }
    }
}

/// Immediate dominators derived from the dominator sets: the strict
/// dominator whose own set is Dom(v) minus v.
pub fn naive_idom(n: usize, succ: &[Vec<usize>], root: usize) -> Vec<Option<usize>> {
    let dom = dominator_sets(n, succ, root);
    (0..n)
        .map(|v| {
            if v == root {
                return None;
            }
            let d = dom[v].as_ref()?;
            let mut strict = d.clone();
            strict.remove(&v);
            strict.iter().copied().find(|&c| dom[c].as_ref() == Some(&strict))
        })
        .collect()
}

/// Vertices of a DAG dominated by no other vertex when a virtual root feeds
/// every source.
pub fn naive_hot(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut succ = vec![Vec::new(); n + 1];
    let mut has_pred = vec![false; n];
    for &(a, b) in edges {
        succ[a].push(b);
        has_pred[b] = true;
    }
    succ[n] = (0..n).filter(|&v| !has_pred[v]).collect();
    let dom = dominator_sets(n + 1, &succ, n);
    (0..n)
        .filter(|&v| dom[v].as_ref().is_some_and(|d| d.len() == 2))
        .collect()
}

/// Random DAG on `n` vertices: edges only go from lower to higher numbers,
/// then the numbering is shuffled.
pub fn random_dag(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize)> {
    use rand::seq::SliceRandom;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let density = rng.gen_range(0.0..(3.0 / n.max(1) as f64).min(1.0));
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(density) {
                edges.push((perm[a], perm[b]));
            }
        }
    }
    edges
}

/// Random digraph, cycles allowed.
pub fn random_digraph(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<usize>> {
    let m = rng.gen_range(0..=3 * n);
    let mut succ = vec![Vec::new(); n];
    for _ in 0..m {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        succ[a].push(b);
    }
    for s in &mut succ {
        s.sort_unstable();
        s.dedup();
    }
    succ
}
