//! Seeded graph families: Erdős–Rényi, random regular, paths, the
//! inner-product query graphs, and neighboring pairs for privacy audits.
//!
//! Every generator is a pure function of its parameters and seed.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Restart budget for [`gen_regular`].
pub const REGULAR_MAX_RETRIES: usize = 10_000;

/// Erdős–Rényi `G(n, p)`.
///
/// Uses geometric skipping over the `n(n-1)/2` candidate pairs, so the cost is
/// proportional to the number of edges rather than to `n²`.
pub fn gen_gnp(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::invalid(format!(
            "edge probability {p} not in [0, 1]"
        )));
    }
    if p == 0.0 || n < 2 {
        return Ok(Graph::empty(n));
    }
    if p == 1.0 {
        return Ok(Graph::complete(n));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let log_q = (1.0 - p).ln();
    let mut edges = Vec::new();
    let (mut v, mut w): (usize, i64) = (1, -1);
    while v < n {
        let r: f64 = rng.random();
        let skip = ((1.0 - r).ln() / log_q).floor();
        w += 1 + skip as i64;
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            edges.push((w as usize, v));
        }
    }
    Graph::from_edges(n, edges)
}

/// Uniform-ish simple `d`-regular graph.
///
/// Configuration-model pairing where each proposed stub pair that would
/// create a loop or a repeated edge is rejected and redrawn; a pairing that
/// gets stuck is discarded and restarted, up to [`REGULAR_MAX_RETRIES`] times.
pub fn gen_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if d >= n.max(1) && !(n == 0 && d == 0) {
        return Err(Error::invalid(format!("degree {d} must be below n = {n}")));
    }
    if !(n * d).is_multiple_of(2) {
        return Err(Error::invalid(format!("n·d = {} is odd", n * d)));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    for _ in 0..REGULAR_MAX_RETRIES {
        if let Some(adj) = try_pairing(n, d, &mut rng) {
            return Ok(Graph::from_adjacency_unchecked(adj));
        }
    }
    Err(Error::invalid(format!(
        "no simple {d}-regular graph on {n} vertices after {REGULAR_MAX_RETRIES} attempts"
    )))
}

fn try_pairing(n: usize, d: usize, rng: &mut Xoshiro256PlusPlus) -> Option<Vec<Vec<usize>>> {
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(d); n];
    let mut failures = 0usize;
    while !stubs.is_empty() {
        let len = stubs.len();
        let i = rng.random_range(0..len);
        let j = rng.random_range(0..len);
        let (u, v) = (stubs[i], stubs[j]);
        if i == j || u == v || adj[u].contains(&v) {
            failures += 1;
            if failures > 50 * len + 100 {
                return None;
            }
            continue;
        }
        failures = 0;
        adj[u].push(v);
        adj[v].push(u);
        let (hi, lo) = if i > j { (i, j) } else { (j, i) };
        stubs.swap_remove(hi);
        stubs.swap_remove(lo);
    }
    Some(adj)
}

/// Path `0 − 1 − ⋯ − (n−1)`.
pub fn gen_path(n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(Error::invalid("path needs at least one vertex"));
    }
    Graph::from_edges(n, (1..n).map(|v| (v - 1, v)))
}

/// Secret vector `X` and query vector `Q` defining a query graph `G_X(Q)`.
///
/// The vertex layout is fixed: `x = 0`, `A = 1..=n`, `B = n+1..=2n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryGraphSpec {
    pub secret: Vec<bool>,
    pub query: Vec<bool>,
}

impl QueryGraphSpec {
    pub fn new(secret: Vec<bool>, query: Vec<bool>) -> Result<Self> {
        if secret.len() != query.len() {
            return Err(Error::invalid(format!(
                "secret has length {} but query has length {}",
                secret.len(),
                query.len()
            )));
        }
        Ok(QueryGraphSpec { secret, query })
    }

    /// Parses two strings of `0`/`1` characters.
    pub fn from_bit_strings(secret: &str, query: &str) -> Result<Self> {
        Self::new(parse_bits(secret)?, parse_bits(query)?)
    }

    /// Half-size parameter `n = |A| = |B|`.
    pub fn half_size(&self) -> usize {
        self.secret.len()
    }

    pub fn vertex_count(&self) -> usize {
        2 * self.half_size() + 1
    }

    pub const fn x_vertex(&self) -> usize {
        0
    }

    /// Vertex id of `a_i`, `i` in `0..n`.
    pub fn a_vertex(&self, i: usize) -> usize {
        1 + i
    }

    /// Vertex id of `b_i`, `i` in `0..n`.
    pub fn b_vertex(&self, i: usize) -> usize {
        1 + self.half_size() + i
    }

    pub fn a_vertices(&self) -> std::ops::Range<usize> {
        1..1 + self.half_size()
    }

    pub fn b_vertices(&self) -> std::ops::Range<usize> {
        1 + self.half_size()..self.vertex_count()
    }

    /// `⟨Q, X⟩`.
    pub fn inner_product(&self) -> usize {
        self.secret
            .iter()
            .zip(&self.query)
            .filter(|(x, q)| **x && **q)
            .count()
    }
}

fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::invalid(format!("expected 0/1, got {other:?}"))),
        })
        .collect()
}

/// Builds `G_X(Q)`: `a_i ~ x` iff `X_i = 1`; `a_i` is adjacent to all of `B`
/// iff `Q_i = 1`; `B` is a clique; `x` is never adjacent to `B`.
pub fn gen_query_graph(spec: &QueryGraphSpec) -> Result<Graph> {
    let n = spec.half_size();
    if spec.query.len() != n {
        return Err(Error::invalid("secret and query lengths differ"));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        let a = spec.a_vertex(i);
        if spec.secret[i] {
            edges.push((spec.x_vertex(), a));
        }
        if spec.query[i] {
            edges.extend(spec.b_vertices().map(|b| (a, b)));
        }
    }
    for b1 in spec.b_vertices() {
        edges.extend((b1 + 1..spec.vertex_count()).map(|b2| (b1, b2)));
    }
    Graph::from_edges(spec.vertex_count(), edges)
}

/// `(g, g')` where `g'` is `g` with edge `{u, v}` toggled.
pub fn neighboring_pair(g: &Graph, u: usize, v: usize) -> Result<(Graph, Graph)> {
    if u == v {
        return Err(Error::invalid(
            "neighboring pair needs two distinct endpoints",
        ));
    }
    let toggled = g.toggle_edge(u, v)?;
    Ok((g.clone(), toggled))
}
