//! Small digraph utilities over successor lists.

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

/// Strongly connected components of the digraph given by `succ`, restricted
/// to the vertices with `keep[v] == true` (all vertices when `keep` is `None`).
pub(crate) fn components(succ: &[Vec<usize>], keep: Option<&[bool]>) -> Vec<Vec<usize>> {
    let n = succ.len();
    let kept = |v: usize| keep.is_none_or(|k| k[v]);
    let mut g: DiGraph<usize, ()> = DiGraph::with_capacity(n, n);
    let nodes: Vec<NodeIndex> = (0..n).map(|v| g.add_node(v)).collect();
    for (u, out) in succ.iter().enumerate() {
        if !kept(u) {
            continue;
        }
        for &v in out {
            if kept(v) {
                g.add_edge(nodes[u], nodes[v], ());
            }
        }
    }
    tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut c: Vec<usize> = c.into_iter().map(|ix| g[ix]).filter(|&v| kept(v)).collect();
            c.sort_unstable();
            c
        })
        .filter(|c| !c.is_empty())
        .collect()
}

/// Whether the component carries a cycle (more than one vertex, or a self-loop).
pub(crate) fn is_cyclic(succ: &[Vec<usize>], component: &[usize]) -> bool {
    component.len() > 1 || succ[component[0]].contains(&component[0])
}

/// gcd of cycle lengths inside a strongly connected component.
/// Returns 0 for an acyclic singleton.
pub(crate) fn period(succ: &[Vec<usize>], component: &[usize]) -> usize {
    if !is_cyclic(succ, component) {
        return 0;
    }
    let n = succ.len();
    let mut inside = vec![false; n];
    for &v in component {
        inside[v] = true;
    }
    let mut level = vec![usize::MAX; n];
    let root = component[0];
    level[root] = 0;
    let mut queue = std::collections::VecDeque::from([root]);
    let mut g = 0usize;
    while let Some(u) = queue.pop_front() {
        for &v in &succ[u] {
            if !inside[v] {
                continue;
            }
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            } else {
                let diff = (level[u] + 1).abs_diff(level[v]);
                g = gcd(g, diff);
            }
        }
    }
    g
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn predecessors(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut pred = vec![Vec::new(); succ.len()];
    for (u, out) in succ.iter().enumerate() {
        for &v in out {
            pred[v].push(u);
        }
    }
    pred
}
