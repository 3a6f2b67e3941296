//! Hot slots: blank slots that no other blank slot dominates.

/// Immediate dominators of every vertex reachable from `root`, by the
/// semi-NCA algorithm. Unreachable vertices and the root map to `None`.
pub fn semi_nca(n: usize, succ: &[Vec<usize>], root: usize) -> Vec<Option<usize>> {
    const NONE: usize = usize::MAX;
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, ws) in succ.iter().enumerate() {
        for &w in ws {
            pred[w].push(v);
        }
    }

    // Depth-first numbering. `order[i]` is the vertex numbered i.
    let mut num = vec![NONE; n];
    let mut order = Vec::with_capacity(n);
    let mut parent = vec![NONE; n];
    let mut stack = vec![(root, 0usize)];
    num[root] = 0;
    order.push(root);
    while let Some((v, i)) = stack.pop() {
        if i < succ[v].len() {
            stack.push((v, i + 1));
            let w = succ[v][i];
            if num[w] == NONE {
                num[w] = order.len();
                order.push(w);
                parent[w] = v;
                stack.push((w, 0));
            }
        }
    }
    let m = order.len();

    // Semidominators, with vertices named by DFS number from here on. A
    // vertex is linked to its DFS parent once processed; `eval` returns the
    // vertex of least semidominator on the linked path above it.
    let mut semi: Vec<usize> = (0..m).collect();
    let mut label: Vec<usize> = (0..m).collect();
    let mut ancestor = vec![NONE; m];
    let mut idom: Vec<usize> = (0..m).map(|i| if i == 0 { 0 } else { num[parent[order[i]]] }).collect();

    fn eval(v: usize, ancestor: &mut [usize], label: &mut [usize], semi: &[usize]) -> usize {
        if ancestor[v] == usize::MAX {
            return v;
        }
        let mut path = Vec::new();
        let mut u = v;
        while ancestor[ancestor[u]] != usize::MAX {
            path.push(u);
            u = ancestor[u];
        }
        while let Some(x) = path.pop() {
            let a = ancestor[x];
            if semi[label[a]] < semi[label[x]] {
                label[x] = label[a];
            }
            ancestor[x] = ancestor[a];
        }
        label[v]
    }

    for i in (1..m).rev() {
        for &v in &pred[order[i]] {
            if num[v] == NONE {
                continue;
            }
            let u = eval(num[v], &mut ancestor, &mut label, &semi);
            semi[i] = semi[i].min(semi[u]);
        }
        ancestor[i] = idom[i];
    }

    // Nearest common ancestor pass: climb the tentative idom chain until
    // the number is at most the semidominator.
    for i in 1..m {
        let mut d = idom[i];
        while d > semi[i] {
            d = idom[d];
        }
        idom[i] = d;
    }

    let mut out = vec![None; n];
    for i in 1..m {
        out[order[i]] = Some(order[idom[i]]);
    }
    out
}

/// Vertices of a directed graph not dominated by any other vertex, when
/// every source component is entered from a shared virtual root. Returned in
/// ascending order.
pub fn hot_slots_of_graph(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for &(a, b) in edges {
        if a != b {
            succ[a].push(b);
        }
    }
    for s in &mut succ {
        s.sort_unstable();
        s.dedup();
    }
    let root = n;
    succ[root] = entry_points(n, &succ[..n]);
    let idom = semi_nca(n + 1, &succ, root);
    (0..n).filter(|&v| idom[v] == Some(root)).collect()
}

/// The smallest vertex of each strongly connected component that has no
/// incoming edge from another component.
fn entry_points(n: usize, succ: &[Vec<usize>]) -> Vec<usize> {
    let comp = crate::tdg::scc(succ);
    let ncomp = comp.iter().copied().max().map_or(0, |c| c + 1);
    let mut has_pred = vec![false; ncomp];
    for (v, ws) in succ.iter().enumerate() {
        for &w in ws {
            if comp[v] != comp[w] {
                has_pred[comp[w]] = true;
            }
        }
    }
    let mut first = vec![usize::MAX; ncomp];
    for (v, &c) in comp.iter().enumerate().take(n) {
        if first[c] == usize::MAX {
            first[c] = v;
        }
    }
    let mut roots: Vec<usize> = (0..ncomp).filter(|&c| !has_pred[c]).map(|c| first[c]).collect();
    roots.sort_unstable();
    roots
}
