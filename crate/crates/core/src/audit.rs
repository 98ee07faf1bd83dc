//! Executable checks on sensitivity and accuracy.
//!
//! Privacy is audited structurally rather than statistically: the noise
//! scales are fixed by the sensitivity of what gets perturbed, so the audits
//! replay neighboring inputs and measure exactly how much the perturbed
//! quantities move.

use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::counting::{bt_error_bound, tree_levels, tree_node_values, CounterConfig};
use crate::error::{Error, Result};
use crate::exact::run_exact_core;
use crate::graph::Graph;
use crate::noise::{tail_radius, NoiseLabel, NoiseSource};
use crate::sim::{RunConfig, Transcript};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub kind: String,
    pub pass: bool,
    pub details: Value,
}

impl AuditReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }
}

/// Tree nodes `(level, epoch)` whose block contains element `s` (1-based)
/// and that a stream of length `len` materializes.
pub fn materialized_ancestors(s: u64, len: u64) -> Vec<(u32, u64)> {
    (0..u64::BITS - len.leading_zeros())
        .filter_map(|j| {
            let epoch = (s - 1) / (1 << j) + 1;
            (epoch % 2 == 1 && epoch << j <= len).then_some((j, epoch))
        })
        .collect()
}

/// Replays the tree's true node values on random neighboring stream pairs
/// and checks that they differ in at most `⌊log₂ T⌋ + 1` nodes, by exactly
/// one each, and precisely at the materialized ancestors of the changed
/// element.
pub fn audit_counter_sensitivity(
    cfg: &CounterConfig,
    stream_len: usize,
    trials: usize,
    seed: u64,
) -> Result<AuditReport> {
    cfg.validate()?;
    if stream_len == 0 || stream_len > cfg.horizon {
        return Err(Error::invalid(format!(
            "stream length {stream_len} must be in 1..={}",
            cfg.horizon
        )));
    }
    let levels = tree_levels(cfg.horizon) as usize;
    let src = NoiseSource::laplace(seed);
    let (mut failures, mut max_nodes, mut max_delta) = (0usize, 0usize, 0u64);
    for trial in 0..trials as u64 {
        let mut rng = src.rng(NoiseLabel::Custom {
            tag: 0xa0d1,
            index: trial,
        });
        let a: Vec<u64> = (0..stream_len).map(|_| rng.random_range(0..=4)).collect();
        let mut b = a.clone();
        let s = rng.random_range(0..stream_len);
        b[s] = if b[s] == 0 || rng.random() {
            b[s] + 1
        } else {
            b[s] - 1
        };

        let (na, nb) = (tree_node_values(&a), tree_node_values(&b));
        let differing: BTreeSet<(u32, u64)> = na
            .keys()
            .filter(|key| na[key] != nb[key])
            .copied()
            .collect();
        let delta = differing
            .iter()
            .map(|k| na[k].abs_diff(nb[k]))
            .max()
            .unwrap_or(0);
        let expected: BTreeSet<_> = materialized_ancestors(s as u64 + 1, stream_len as u64)
            .into_iter()
            .collect();
        max_nodes = max_nodes.max(differing.len());
        max_delta = max_delta.max(delta);
        if differing.len() > levels || delta > 1 || differing != expected {
            failures += 1;
        }
    }
    Ok(AuditReport {
        kind: "counter-sensitivity".into(),
        pass: failures == 0,
        details: json!({
            "horizon": cfg.horizon,
            "stream_len": stream_len,
            "trials": trials,
            "levels": levels,
            "max_differing_nodes": max_nodes,
            "max_node_difference": max_delta,
            "failures": failures,
        }),
    })
}

/// Per-round counter inputs `x_t(v) = |N_v ∩ S_{t-1}|` for `t = 2, 3, …`
/// while `v` is alive, read off the graph and transcript.
pub fn counter_streams(g: &Graph, tr: &Transcript) -> Vec<Vec<u64>> {
    let mut streams = vec![Vec::new(); g.vertex_count()];
    for t in 2..=tr.round_count() {
        for v in g.vertices().filter(|&v| tr.alive_in(v, t)) {
            let x = g
                .neighbors(v)
                .iter()
                .filter(|&&u| tr.deleted_at(u) == Some(t - 1))
                .count() as u64;
            streams[v].push(x);
        }
    }
    streams
}

/// Runs the exact protocol on `g` and on `g` with `edge` toggled, under the
/// same noise, and compares everything the users perturb up to the first
/// round whose deletion set differs. Passes iff only the endpoints' initial
/// degrees differ (by one each), non-endpoint streams agree, and each
/// endpoint's stream differs in at most one element, by one, at the round
/// right after the other endpoint was deleted.
pub fn audit_protocol_stream_discrepancy(
    g: &Graph,
    edge: (usize, usize),
    cfg: &RunConfig,
) -> Result<AuditReport> {
    let (u, w) = edge;
    let g2 = g.toggle_edge(u, w)?;
    let a = run_exact_core(g, cfg)?;
    let b = run_exact_core(&g2, cfg)?;
    let (ta, tb) = (&a.transcript, &b.transcript);

    // First round whose deletion set differs; rounds before it are shared.
    let shared = ta
        .rounds()
        .iter()
        .zip(tb.rounds())
        .take_while(|(x, y)| x.deleted == y.deleted)
        .count();
    let divergence = (shared < ta.round_count().max(tb.round_count())).then_some(shared + 1);
    // Inputs up to round `shared + 1` depend only on the shared prefix.
    let horizon = shared + 1;
    let (sa, sb) = (counter_streams(g, ta), counter_streams(&g2, tb));

    let mut problems = Vec::new();
    let mut nonendpoint_discrepancy = 0u64;
    let mut endpoint_changes = Vec::new();
    for v in g.vertices() {
        let da = g.neighbors(v).len() as i64;
        let db = g2.neighbors(v).len() as i64;
        let is_endpoint = v == u || v == w;
        if (da - db).abs() != i64::from(is_endpoint) {
            problems.push(format!(
                "vertex {v}: initial degree differs by {}",
                (da - db).abs()
            ));
        }
        // Stream element i is the input of round i + 2.
        let len = sa[v].len().min(sb[v].len()).min(horizon.saturating_sub(1));
        let diffs: Vec<(usize, u64)> = (0..len)
            .filter(|&i| sa[v][i] != sb[v][i])
            .map(|i| (i + 2, sa[v][i].abs_diff(sb[v][i])))
            .collect();
        if !is_endpoint {
            nonendpoint_discrepancy += diffs.iter().map(|d| d.1).sum::<u64>();
            continue;
        }
        let other = if v == u { w } else { u };
        let allowed = ta.deleted_at(other).map(|r| r + 1);
        let ok = diffs.len() <= 1
            && diffs
                .iter()
                .all(|&(round, delta)| delta == 1 && Some(round) == allowed);
        if !ok {
            problems.push(format!("endpoint {v}: stream differences {diffs:?}"));
        }
        endpoint_changes.push(json!({ "vertex": v, "differences": diffs }));
    }
    if nonendpoint_discrepancy > 0 {
        problems.push(format!(
            "non-endpoint stream discrepancy {nonendpoint_discrepancy}"
        ));
    }
    Ok(AuditReport {
        kind: "stream-discrepancy".into(),
        pass: problems.is_empty(),
        details: json!({
            "edge": [u, w],
            "edge_present": g.has_edge(u, w),
            "shared_rounds": shared,
            "first_divergence": divergence,
            "nonendpoint_discrepancy": nonendpoint_discrepancy,
            "endpoints": endpoint_changes,
            "problems": problems,
        }),
    })
}

fn check_shape(tr: &Transcript, g: &Graph) -> Result<()> {
    if tr.vertex_count() != g.vertex_count() {
        return Err(Error::invalid(format!(
            "transcript has {} vertices, graph has {}",
            tr.vertex_count(),
            g.vertex_count()
        )));
    }
    Ok(())
}

/// Walks the transcript, yielding `(v, t, message, true degree at t)`.
fn for_each_message(tr: &Transcript, g: &Graph, mut f: impl FnMut(usize, usize, f64, usize)) {
    let mut degree: Vec<usize> = g.vertices().map(|v| g.neighbors(v).len()).collect();
    for round in tr.rounds() {
        for (v, m) in round.msgs.iter() {
            f(v, round.t, m, degree[v]);
        }
        for &x in &round.deleted {
            for &y in g.neighbors(x) {
                degree[y] -= 1;
            }
        }
    }
}

/// `max |d̃_t(v) − deg_t(v)|` over every message in the transcript, where
/// `deg_t(v)` is v's degree among vertices alive at round `t`.
pub fn measure_alpha_obs(tr: &Transcript, g: &Graph) -> Result<f64> {
    check_shape(tr, g)?;
    let mut alpha = 0.0f64;
    for_each_message(tr, g, |_, _, m, d| alpha = alpha.max((m - d as f64).abs()));
    Ok(alpha)
}

/// Largest counter error in the run: `|released sum − true sum|` over every
/// message after the first, recovered as `(d̃_1 − d̃_t) − (deg_1 − deg_t)`.
pub fn measure_counter_error(tr: &Transcript, g: &Graph) -> Result<f64> {
    check_shape(tr, g)?;
    let Some(first) = tr.rounds().first() else {
        return Ok(0.0);
    };
    let mut err = 0.0f64;
    for_each_message(tr, g, |v, t, m, d| {
        if t > 1 {
            let released = first.msgs[v] - m;
            let truth = (g.neighbors(v).len() - d) as f64;
            err = err.max((released - truth).abs());
        }
    });
    Ok(err)
}

/// High-probability bound on `α_obs` for an exact-protocol run on `n`
/// vertices: counter error plus initial noise, each at failure `1/n²`.
pub fn alpha_bound(n: usize, epsilon: f64) -> f64 {
    let n = n.max(2);
    let beta = 1.0 / (n * n) as f64;
    bt_error_bound(n, beta, epsilon / 2.0) + tail_radius(4.0 / epsilon, beta)
}

/// Runs the exact protocol `trials` times with independent noise and
/// compares each `α_obs` to [`alpha_bound`]. Passes iff at least 95% of
/// trials stay within the bound and every run satisfies the accuracy chain
/// `|k̃(v) − k(v)| ≤ α_obs`.
pub fn audit_alpha(g: &Graph, cfg: &RunConfig, trials: usize) -> Result<AuditReport> {
    let coreness = crate::graph::exact_coreness(g);
    let bound = alpha_bound(g.vertex_count(), cfg.epsilon);
    let mut alphas = Vec::with_capacity(trials);
    let mut chain_failures = 0usize;
    for trial in 0..trials as u64 {
        let mut c = cfg.clone();
        c.seed = cfg.noise_source().derive(trial).key();
        let run = run_exact_core(g, &c)?;
        let alpha = measure_alpha_obs(&run.transcript, g)?;
        if run.estimates.max_abs_error(&coreness) > alpha {
            chain_failures += 1;
        }
        alphas.push(alpha);
    }
    let within = alphas.iter().filter(|&&a| a <= bound).count();
    let rate = if trials == 0 {
        1.0
    } else {
        within as f64 / trials as f64
    };
    Ok(AuditReport {
        kind: "alpha".into(),
        pass: rate >= 0.95 && chain_failures == 0,
        details: json!({
            "n": g.vertex_count(),
            "epsilon": cfg.epsilon,
            "counter": cfg.counter.name(),
            "trials": trials,
            "bound": bound,
            "alpha_obs": alphas,
            "within_bound_rate": rate,
            "required_rate": 0.95,
            "chain_failures": chain_failures,
        }),
    })
}
