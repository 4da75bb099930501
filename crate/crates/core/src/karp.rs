//! Maximum mean cycle (Karp) on vertex-weighted digraphs.
//!
//! A vertex weight `w(u)` is carried by every edge leaving `u`, so the mean of a
//! cycle is the average of `w` along the periodic orbit it encodes.

use crate::graph;

/// Largest mean weight of a cycle; `None` for an acyclic graph.
pub fn max_mean_cycle(succ: &[Vec<usize>], weight: &[f64]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for comp in graph::components(succ, None) {
        if !graph::is_cyclic(succ, &comp) {
            continue;
        }
        let v = component_max_mean(succ, weight, &comp);
        best = Some(best.map_or(v, |b: f64| b.max(v)));
    }
    best
}

fn component_max_mean(succ: &[Vec<usize>], weight: &[f64], comp: &[usize]) -> f64 {
    let n = comp.len();
    let mut local = vec![usize::MAX; succ.len()];
    for (i, &u) in comp.iter().enumerate() {
        local[u] = i;
    }
    let edges: Vec<(usize, usize, f64)> = comp
        .iter()
        .enumerate()
        .flat_map(|(i, &u)| {
            let local = &local;
            succ[u]
                .iter()
                .filter(move |&&v| local[v] != usize::MAX)
                .map(move |&v| (i, local[v], weight[u]))
        })
        .collect();
    // d[k][v]: heaviest walk of exactly k edges from vertex 0 to v
    let mut d = vec![vec![f64::NEG_INFINITY; n]; n + 1];
    d[0][0] = 0.0;
    for k in 1..=n {
        let (prev, cur) = d.split_at_mut(k);
        let (prev, cur) = (&prev[k - 1], &mut cur[0]);
        for &(u, v, w) in &edges {
            if prev[u] > f64::NEG_INFINITY && prev[u] + w > cur[v] {
                cur[v] = prev[u] + w;
            }
        }
    }
    let mut best = f64::NEG_INFINITY;
    for v in 0..n {
        if d[n][v] == f64::NEG_INFINITY {
            continue;
        }
        let worst = (0..n)
            .filter(|&k| d[k][v] > f64::NEG_INFINITY)
            .map(|k| (d[n][v] - d[k][v]) / (n - k) as f64)
            .fold(f64::INFINITY, f64::min);
        best = best.max(worst);
    }
    best
}

/// Brute force over all simple cycles. Exponential; meant for small graphs.
pub fn max_mean_cycle_exhaustive(succ: &[Vec<usize>], weight: &[f64]) -> Option<f64> {
    fn walk(
        succ: &[Vec<usize>],
        weight: &[f64],
        start: usize,
        u: usize,
        on_path: &mut [bool],
        len: usize,
        total: f64,
        best: &mut Option<f64>,
    ) {
        for &v in &succ[u] {
            if v == start {
                let mean = (total + weight[u]) / (len + 1) as f64;
                *best = Some(best.map_or(mean, |b: f64| b.max(mean)));
            } else if v > start && !on_path[v] {
                on_path[v] = true;
                walk(succ, weight, start, v, on_path, len + 1, total + weight[u], best);
                on_path[v] = false;
            }
        }
    }
    let mut best = None;
    let mut on_path = vec![false; succ.len()];
    for s in 0..succ.len() {
        on_path[s] = true;
        walk(succ, weight, s, s, &mut on_path, 0, 0.0, &mut best);
        on_path[s] = false;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_graphs() {
        // two-cycle 0 <-> 1 and a self-loop at 2 reachable from 1
        let succ = vec![vec![1], vec![0, 2], vec![2]];
        assert_eq!(max_mean_cycle(&succ, &[1.0, 0.0, 0.3]), Some(0.5));
        assert_eq!(max_mean_cycle(&succ, &[1.0, 0.0, 0.7]), Some(0.7));
        assert_eq!(max_mean_cycle(&[vec![1], vec![]], &[1.0, 1.0]), None);
    }

    #[test]
    fn agrees_with_exhaustive_on_dense_graph() {
        let succ: Vec<Vec<usize>> = (0..5).map(|u| (0..5).filter(|v| (u * 7 + v * 3) % 4 != 0).collect()).collect();
        let w = [0.3, -1.0, 2.0, 0.5, 0.0];
        let a = max_mean_cycle(&succ, &w).unwrap();
        let b = max_mean_cycle_exhaustive(&succ, &w).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
