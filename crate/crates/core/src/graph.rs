//! Simple undirected graphs and the exact, non-private oracles used as ground
//! truth: peeling coreness and brute-force densest subgraph.
//!
//! Vertices are the integers `0..n`. Neighbor lists are kept sorted so that
//! every iteration order, and therefore every seeded run, is deterministic.

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Exact density `|E| / |V|`.
pub type Density = Ratio<u64>;

/// Largest graph accepted by [`brute_force_densest`].
pub const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Edgeless graph on `n` vertices.
    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
        }
    }

    /// Builds a graph from an edge list. Self-loops are rejected; repeated
    /// edges (in either orientation) collapse to one.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop at vertex {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Graph { adj })
    }

    /// Builds a graph from neighbor lists that the caller guarantees are
    /// symmetric and loop-free. Lists are sorted and deduplicated here.
    pub(crate) fn from_adjacency_unchecked(mut adj: Vec<Vec<usize>>) -> Self {
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Graph { adj }
    }

    /// Complete graph `K_n`.
    pub fn complete(n: usize) -> Self {
        let adj = (0..n)
            .map(|v| (0..n).filter(|&u| u != v).collect())
            .collect();
        Graph { adj }
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn vertices(&self) -> std::ops::Range<usize> {
        0..self.adj.len()
    }

    fn check(&self, v: usize) -> Result<()> {
        if v < self.adj.len() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange {
                vertex: v,
                n: self.adj.len(),
            })
        }
    }

    /// `|N_v|`.
    pub fn degree(&self, v: usize) -> Result<usize> {
        self.check(v)?;
        Ok(self.adj[v].len())
    }

    /// Sorted neighbor list of `v`. Panics if `v` is out of range.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.adj.len() && self.adj[u].binary_search(&v).is_ok()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, list)| {
            list.iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Copy of the graph with edge `{u, v}` added if absent, removed if present.
    pub fn toggle_edge(&self, u: usize, v: usize) -> Result<Graph> {
        self.check(u)?;
        self.check(v)?;
        if u == v {
            return Err(Error::invalid("cannot toggle a self-loop"));
        }
        let mut adj = self.adj.clone();
        for (a, b) in [(u, v), (v, u)] {
            match adj[a].binary_search(&b) {
                Ok(pos) => {
                    adj[a].remove(pos);
                }
                Err(pos) => adj[a].insert(pos, b),
            }
        }
        Ok(Graph { adj })
    }

    /// `G[U]` viewed through a membership mask over the original ids.
    pub fn induced_subgraph(&self, members: &[usize]) -> Result<InducedSubgraph<'_>> {
        let mut mask = vec![false; self.adj.len()];
        for &v in members {
            self.check(v)?;
            mask[v] = true;
        }
        Ok(InducedSubgraph { graph: self, mask })
    }

    /// Exact density of the whole graph.
    pub fn density(&self) -> Result<Density> {
        if self.adj.is_empty() {
            return Err(Error::invalid("density of the empty vertex set"));
        }
        Ok(Ratio::new(
            self.edge_count() as u64,
            self.vertex_count() as u64,
        ))
    }
}

/// An induced subgraph that keeps the parent's vertex ids and records
/// membership in a mask.
#[derive(Clone, Debug)]
pub struct InducedSubgraph<'g> {
    graph: &'g Graph,
    mask: Vec<bool>,
}

impl<'g> InducedSubgraph<'g> {
    pub fn contains(&self, v: usize) -> bool {
        self.mask.get(v).copied().unwrap_or(false)
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(v, &m)| m.then_some(v))
    }

    pub fn vertex_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Induced degree of a member vertex; zero for non-members.
    pub fn degree(&self, v: usize) -> usize {
        if !self.contains(v) {
            return 0;
        }
        self.graph
            .neighbors(v)
            .iter()
            .filter(|&&u| self.mask[u])
            .count()
    }

    pub fn edge_count(&self) -> usize {
        self.members().map(|v| self.degree(v)).sum::<usize>() / 2
    }

    /// Minimum induced degree, `None` for the empty subgraph.
    pub fn min_degree(&self) -> Option<usize> {
        self.members().map(|v| self.degree(v)).min()
    }

    pub fn density(&self) -> Result<Density> {
        let nv = self.vertex_count();
        if nv == 0 {
            return Err(Error::invalid("density of the empty vertex set"));
        }
        Ok(Ratio::new(self.edge_count() as u64, nv as u64))
    }

    /// Materializes `G[U]` with members relabeled `0..|U|` in increasing id order.
    pub fn to_graph(&self) -> Graph {
        let mut relabel = vec![usize::MAX; self.mask.len()];
        for (next, v) in self.members().enumerate() {
            relabel[v] = next;
        }
        let adj = self
            .members()
            .map(|v| {
                self.graph
                    .neighbors(v)
                    .iter()
                    .filter(|&&u| self.mask[u])
                    .map(|&u| relabel[u])
                    .collect()
            })
            .collect();
        Graph { adj }
    }
}

/// Exact coreness `k_G(v)` of every vertex.
///
/// Bucketed peeling: the current level `d` is the running maximum of the
/// minimum remaining degree, and each deleted vertex is assigned the value of
/// `d` at its deletion, exactly as in the three-step Matula–Beck loop.
pub fn exact_coreness(g: &Graph) -> Vec<usize> {
    let n = g.vertex_count();
    let mut degree: Vec<usize> = g.vertices().map(|v| g.neighbors(v).len()).collect();
    let max_deg = degree.iter().copied().max().unwrap_or(0);

    // Bin-sort vertices by degree; `pos` tracks each vertex's slot so that a
    // decrement is a swap to the front of its bin.
    let mut bin_start = vec![0usize; max_deg + 2];
    for &d in &degree {
        bin_start[d + 1] += 1;
    }
    for d in 1..bin_start.len() {
        bin_start[d] += bin_start[d - 1];
    }
    let mut order = vec![0usize; n];
    let mut pos = vec![0usize; n];
    {
        let mut fill = bin_start.clone();
        for v in 0..n {
            pos[v] = fill[degree[v]];
            order[pos[v]] = v;
            fill[degree[v]] += 1;
        }
    }

    let mut core = vec![0usize; n];
    for i in 0..n {
        let v = order[i];
        core[v] = degree[v];
        for &u in g.neighbors(v) {
            if degree[u] > degree[v] {
                let du = degree[u];
                let first = bin_start[du];
                let w = order[first];
                if u != w {
                    order.swap(pos[u], first);
                    pos[w] = pos[u];
                    pos[u] = first;
                }
                bin_start[du] += 1;
                degree[u] -= 1;
            }
        }
    }
    core
}

/// `{v : k(v) = k*}`, the vertex set of the maximum core.
pub fn max_coreness_core(g: &Graph) -> Result<Vec<usize>> {
    if g.vertex_count() == 0 {
        return Err(Error::invalid("graph has no vertices"));
    }
    let core = exact_coreness(g);
    let k_star = core.iter().copied().max().unwrap_or(0);
    Ok(g.vertices().filter(|&v| core[v] == k_star).collect())
}

/// Exhaustive densest subgraph for `n ≤ 20`.
///
/// Returns the maximizing vertex set and `ρ*`. Among maximizers the smallest
/// set wins, then the lexicographically smallest one.
pub fn brute_force_densest(g: &Graph) -> Result<(Vec<usize>, Density)> {
    let n = g.vertex_count();
    if n == 0 {
        return Err(Error::invalid("graph has no vertices"));
    }
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeLimit {
            what: "vertex count",
            got: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let masks: Vec<u32> = g
        .vertices()
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &u| m | (1 << u)))
        .collect();

    let mut best: Option<(Density, Vec<usize>)> = None;
    for subset in 1u32..(1u32 << n) {
        let size = subset.count_ones() as u64;
        let twice_edges: u64 = (0..n)
            .filter(|&v| subset & (1 << v) != 0)
            .map(|v| (masks[v] & subset).count_ones() as u64)
            .sum();
        let density = Ratio::new(twice_edges / 2, size);
        let better = match &best {
            None => true,
            Some((d, set)) => density > *d || (density == *d && prefer(subset, set)),
        };
        if better {
            let set = (0..n).filter(|&v| subset & (1 << v) != 0).collect();
            best = Some((density, set));
        }
    }
    let (density, set) = best.expect("at least one nonempty subset");
    Ok((set, density))
}

fn prefer(candidate: u32, incumbent: &[usize]) -> bool {
    let cand: Vec<usize> = (0..32).filter(|&v| candidate & (1 << v) != 0).collect();
    (cand.len(), cand.as_slice()) < (incumbent.len(), incumbent)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, (1..n).map(|v| (v - 1, v))).unwrap()
    }

    fn k4_pendant() -> Graph {
        let mut edges: Vec<_> = Graph::complete(4).edges().collect();
        edges.push((3, 4));
        Graph::from_edges(5, edges).unwrap()
    }

    /// Coreness by definition: max over vertex subsets containing `v` of the
    /// minimum induced degree.
    fn brute_coreness(g: &Graph) -> Vec<usize> {
        let n = g.vertex_count();
        let mut best = vec![0; n];
        for subset in 1u32..(1 << n) {
            let members: Vec<usize> = (0..n).filter(|&v| subset & (1 << v) != 0).collect();
            let sub = g.induced_subgraph(&members).unwrap();
            let k = sub.min_degree().unwrap();
            for &v in &members {
                best[v] = best[v].max(k);
            }
        }
        best
    }

    #[test]
    fn degree_examples() {
        assert_eq!(Graph::complete(4).degree(2).unwrap(), 3);
        assert_eq!(Graph::empty(5).degree(0).unwrap(), 0);
        assert_eq!(path(3).degree(1).unwrap(), 2);
        assert!(matches!(
            Graph::empty(3).degree(3),
            Err(Error::VertexOutOfRange { vertex: 3, n: 3 })
        ));
    }

    #[test]
    fn from_edges_rejects_loops_and_bad_ids() {
        assert!(Graph::from_edges(3, [(1, 1)]).is_err());
        assert!(Graph::from_edges(3, [(0, 3)]).is_err());
        let g = Graph::from_edges(3, [(0, 1), (1, 0), (0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn induced_subgraph_examples() {
        let k4 = Graph::complete(4);
        assert_eq!(
            k4.induced_subgraph(&[0, 2, 3]).unwrap().to_graph(),
            Graph::complete(3)
        );
        assert_eq!(k4.induced_subgraph(&[0, 1, 2, 3]).unwrap().to_graph(), k4);
        let star = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(
            star.induced_subgraph(&[1, 2, 3]).unwrap().to_graph(),
            Graph::empty(3)
        );
        assert!(k4.induced_subgraph(&[7]).is_err());
    }

    #[test]
    fn coreness_examples() {
        assert_eq!(exact_coreness(&Graph::complete(4)), vec![3; 4]);
        assert_eq!(exact_coreness(&path(4)), vec![1; 4]);
        assert_eq!(exact_coreness(&k4_pendant()), vec![3, 3, 3, 3, 1]);
        assert_eq!(exact_coreness(&Graph::empty(3)), vec![0; 3]);
    }

    #[test]
    fn density_examples() {
        assert_eq!(Graph::complete(4).density().unwrap(), Ratio::new(3, 2));
        assert_eq!(Graph::empty(1).density().unwrap(), Ratio::from_integer(0));
        let c5 = Graph::from_edges(5, (0..5).map(|v| (v, (v + 1) % 5))).unwrap();
        assert_eq!(c5.density().unwrap(), Ratio::from_integer(1));
        assert!(Graph::empty(0).density().is_err());
    }

    #[test]
    fn brute_force_densest_examples() {
        let (set, rho) = brute_force_densest(&k4_pendant()).unwrap();
        assert_eq!(set, vec![0, 1, 2, 3]);
        assert_eq!(rho, Ratio::new(3, 2));

        let (set, rho) = brute_force_densest(&Graph::complete(3)).unwrap();
        assert_eq!(set, vec![0, 1, 2]);
        assert_eq!(rho, Ratio::from_integer(1));

        let (set, rho) = brute_force_densest(&Graph::empty(4)).unwrap();
        assert_eq!(set, vec![0]);
        assert_eq!(rho, Ratio::from_integer(0));

        assert!(matches!(
            brute_force_densest(&Graph::empty(21)),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn max_core_examples() {
        assert_eq!(max_coreness_core(&k4_pendant()).unwrap(), vec![0, 1, 2, 3]);
        let c6 = Graph::from_edges(6, (0..6).map(|v| (v, (v + 1) % 6))).unwrap();
        assert_eq!(max_coreness_core(&c6).unwrap(), (0..6).collect::<Vec<_>>());
        let two_triangles =
            Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        assert_eq!(max_coreness_core(&two_triangles).unwrap().len(), 6);
    }

    #[test]
    fn toggle_is_involution() {
        let g = Graph::complete(4);
        let h = g.toggle_edge(1, 3).unwrap();
        assert!(!h.has_edge(1, 3));
        assert_eq!(h.edge_count(), 5);
        assert_eq!(h.toggle_edge(3, 1).unwrap(), g);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_graph(max_n: usize) -> impl Strategy<Value = Graph> {
            (1..=max_n).prop_flat_map(|n| {
                let pairs: Vec<(usize, usize)> = (0..n)
                    .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                    .collect();
                let m = pairs.len();
                proptest::collection::vec(any::<bool>(), m).prop_map(move |bits| {
                    let edges = pairs.iter().zip(bits).filter(|(_, b)| *b).map(|(e, _)| *e);
                    Graph::from_edges(n, edges).unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn coreness_matches_definition(g in small_graph(8)) {
                prop_assert_eq!(exact_coreness(&g), brute_coreness(&g));
            }

            #[test]
            fn coreness_bounded_by_degree_and_witnessed(g in small_graph(12)) {
                let core = exact_coreness(&g);
                for v in g.vertices() {
                    prop_assert!(core[v] <= g.degree(v).unwrap());
                    let members: Vec<usize> = g.vertices().filter(|&u| core[u] >= core[v]).collect();
                    let sub = g.induced_subgraph(&members).unwrap();
                    prop_assert!(sub.min_degree().unwrap() >= core[v]);
                }
            }

            #[test]
            fn densest_bounded_by_max_coreness(g in small_graph(12)) {
                let core = exact_coreness(&g);
                let k_star = *core.iter().max().unwrap() as u64;
                let (_, rho) = brute_force_densest(&g).unwrap();
                prop_assert!(rho <= Ratio::from_integer(k_star));

                let top = max_coreness_core(&g).unwrap();
                let d = g.induced_subgraph(&top).unwrap().density().unwrap();
                prop_assert!(d * 2 >= Ratio::from_integer(k_star));
            }
        }
    }
}
