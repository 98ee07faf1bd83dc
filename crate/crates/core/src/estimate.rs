use std::collections::BTreeMap;

use serde::Serialize;

use crate::graph::Graph;

/// Per-vertex coreness estimates `k̃(v)` produced by a protocol run.
///
/// Values are the raw server-side reals; they may be negative or
/// fractional under noise.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateVector {
    pub values: Vec<f64>,
    /// Round in which each vertex was deleted and assigned its estimate.
    pub round_assigned: Vec<usize>,
    /// Phase of assignment, for phase-structured protocols.
    pub phase: Option<Vec<usize>>,
}

impl EstimateVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `max(0, round(k̃))`, for display.
    pub fn clamped(&self) -> Vec<u64> {
        self.values
            .iter()
            .map(|&k| {
                if k.is_nan() || k <= 0.0 {
                    0
                } else {
                    k.round() as u64
                }
            })
            .collect()
    }

    /// `max_v |k̃(v) − k(v)|`.
    pub fn max_abs_error(&self, truth: &[usize]) -> f64 {
        self.values
            .iter()
            .zip(truth)
            .map(|(&e, &k)| (e - k as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Largest amount by which any estimate leaves the band `[k, γ·k]`.
    pub fn max_band_excess(&self, truth: &[usize], gamma: f64) -> f64 {
        self.values
            .iter()
            .zip(truth)
            .map(|(&e, &k)| {
                let k = k as f64;
                (k - e).max(e - gamma * k).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// CSV rows `vertex,k_true,k_est,round[,phase]` with a header line.
    pub fn to_csv(&self, truth: &[usize]) -> String {
        let mut out = String::from("vertex,k_true,k_est,round");
        if self.phase.is_some() {
            out.push_str(",phase");
        }
        out.push('\n');
        for v in 0..self.values.len() {
            out.push_str(&format!(
                "{v},{},{},{}",
                truth[v], self.values[v], self.round_assigned[v]
            ));
            if let Some(phase) = &self.phase {
                out.push_str(&format!(",{}", phase[v]));
            }
            out.push('\n');
        }
        out
    }
}

/// Minimum induced degree of `G[U]` with `U = {u : k̃(u) ≥ threshold}`, or
/// `None` if `U` is empty.
pub fn min_degree_above(g: &Graph, est: &EstimateVector, threshold: f64) -> Option<usize> {
    let members: Vec<usize> = g
        .vertices()
        .filter(|&u| est.values[u] >= threshold)
        .collect();
    g.induced_subgraph(&members)
        .expect("ids come from the graph")
        .min_degree()
}

/// Vertices breaking either accuracy statement for ratio `γ` and slack `s`:
/// `k(v) − s ≤ k̃(v) ≤ γ·k(v) + s`, and every vertex of `G[U]` with
/// `U = {u : k̃(u) ≥ k̃(v)}` has induced degree at least `k̃(v)/γ − s`.
pub fn band_violations(
    g: &Graph,
    coreness: &[usize],
    est: &EstimateVector,
    gamma: f64,
    slack: f64,
) -> Vec<usize> {
    let mut cache: BTreeMap<u64, Option<usize>> = BTreeMap::new();
    g.vertices()
        .filter(|&v| {
            let k = coreness[v] as f64;
            let e = est.values[v];
            let sandwich = k - slack <= e && e <= gamma * k + slack;
            let min_deg = *cache
                .entry(e.to_bits())
                .or_insert_with(|| min_degree_above(g, est, e));
            let witness = min_deg.is_some_and(|m| m as f64 >= e / gamma - slack);
            !(sandwich && witness)
        })
        .collect()
}
