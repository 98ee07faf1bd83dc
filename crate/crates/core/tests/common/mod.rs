//! Reference implementations used only to check the library.
#![allow(dead_code)]

use ldp_core::Graph;

/// Coreness by repeated full scans: peel every vertex of degree ≤ k until
/// none is left, raising k whenever the scan finds nothing. Quadratic, and
/// shares no code with the bucket peeler.
pub fn naive_coreness(g: &Graph) -> Vec<usize> {
    let n = g.vertex_count();
    let mut alive = vec![true; n];
    let mut core = vec![0; n];
    let mut left = n;
    let mut k = 0;
    while left > 0 {
        let low: Vec<usize> = (0..n)
            .filter(|&v| alive[v] && live_degree(g, &alive, v) <= k)
            .collect();
        if low.is_empty() {
            k += 1;
            continue;
        }
        for v in low {
            alive[v] = false;
            core[v] = k;
            left -= 1;
        }
    }
    core
}

fn live_degree(g: &Graph, alive: &[bool], v: usize) -> usize {
    g.neighbors(v).iter().filter(|&&u| alive[u]).count()
}

/// Edges inside the vertex set given as a bitmask.
pub fn edges_in_mask(g: &Graph, mask: u32) -> u64 {
    g.edges()
        .filter(|&(u, v)| mask >> u & 1 == 1 && mask >> v & 1 == 1)
        .count() as u64
}

/// Maximum density `(edges, vertices)` over all nonempty vertex subsets.
pub fn naive_max_density(g: &Graph) -> (u64, u64) {
    let n = g.vertex_count();
    assert!((1..=20).contains(&n));
    let mut best = (0u64, 1u64);
    for mask in 1u32..(1 << n) {
        let e = edges_in_mask(g, mask);
        let size = mask.count_ones() as u64;
        if e * best.1 > best.0 * size {
            best = (e, size);
        }
    }
    best
}

/// Minimum degree of the subgraph induced by `members`, `None` if empty.
pub fn induced_min_degree(g: &Graph, members: &[bool]) -> Option<usize> {
    g.vertices()
        .filter(|&v| members[v])
        .map(|v| g.neighbors(v).iter().filter(|&&u| members[u]).count())
        .min()
}

pub fn is_connected(g: &Graph) -> bool {
    let n = g.vertex_count();
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &u in g.neighbors(v) {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

pub fn prefix_sums(xs: &[u64]) -> Vec<u64> {
    xs.iter()
        .scan(0u64, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}
