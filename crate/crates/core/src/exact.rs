//! The private peeling protocol for coreness estimation.
//!
//! Server: keep a running level `d`; each round raise it to the smallest
//! noisy degree received (never lower it), delete every user whose noisy
//! degree is at most `d`, and assign those users the estimate `d`.
//!
//! User `v`: in round 1 send `|N_v| + Lap(4/ε)`. Afterwards, insert the
//! number of neighbors deleted in the previous round into an `ε/2`-private
//! counter and send the initial noisy degree minus the counter's release.
//!
//! With a noise bound `α` on every message, each estimate is within `α` of
//! the true coreness; [`robustness_violations`] checks that statement on a
//! finished run using the measured `α`.

use crate::counting::AdaptiveCounter;
use crate::error::{Error, Result};
use crate::estimate::{band_violations, EstimateVector};
use crate::graph::Graph;
use crate::noise::NoiseSource;
use crate::sim::{run_protocol, users_for, RunConfig, ServerLogic, Transcript, UserMessage};
use crate::values::VertexValues;

/// One server round: `d' = max(d, min msgs)` and `S_t = {v : msg(v) ≤ d'}`.
///
/// `msgs` must hold exactly one message per alive vertex.
pub fn exact_server_step(
    d: f64,
    alive: &[usize],
    msgs: &VertexValues,
) -> Result<(f64, Vec<usize>)> {
    if alive.is_empty() {
        return Err(Error::ProtocolViolation("no alive vertices".into()));
    }
    if msgs.len() != alive.len() {
        return Err(Error::ProtocolViolation(format!(
            "{} messages for {} alive vertices",
            msgs.len(),
            alive.len()
        )));
    }
    let mut min = f64::INFINITY;
    for v in alive {
        let m = msgs
            .get(*v)
            .ok_or_else(|| Error::ProtocolViolation(format!("missing message from vertex {v}")))?;
        if m.is_nan() {
            return Err(Error::ProtocolViolation(format!("vertex {v} sent NaN")));
        }
        min = min.min(m);
    }
    let d = d.max(min);
    let deleted = alive.iter().copied().filter(|&v| msgs[v] <= d).collect();
    Ok((d, deleted))
}

/// One user round after the first: insert `|N_v ∩ S_prev|` and report
/// `d̃_1(v)` minus the counter's release.
pub fn exact_user_step(
    neighbors: &[usize],
    s_prev: &[usize],
    counter: &mut AdaptiveCounter,
    d1: f64,
    noise: &NoiseSource,
) -> Result<UserMessage> {
    let x = sorted_intersection_len(neighbors, s_prev) as u64;
    let release = counter.insert(x, noise)?;
    Ok(UserMessage {
        noisy_degree: d1 - release.sum,
        node: release.node.map(|(_, value)| value),
    })
}

fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Server state across rounds.
#[derive(Clone, Debug)]
pub struct ExactServer {
    d: f64,
    values: Vec<f64>,
    round_assigned: Vec<usize>,
    d_history: Vec<f64>,
}

impl ExactServer {
    pub fn new(n: usize) -> Self {
        ExactServer {
            d: 0.0,
            values: vec![f64::NAN; n],
            round_assigned: vec![0; n],
            d_history: Vec::new(),
        }
    }
}

impl ServerLogic for ExactServer {
    type Output = (EstimateVector, Vec<f64>);

    fn step(&mut self, t: usize, msgs: &VertexValues) -> Result<Vec<usize>> {
        let alive: Vec<usize> = msgs.keys().collect();
        let (d, deleted) = exact_server_step(self.d, &alive, msgs)?;
        self.d = d;
        self.d_history.push(d);
        for &v in &deleted {
            self.values[v] = d;
            self.round_assigned[v] = t;
        }
        Ok(deleted)
    }

    fn finished(&self, _t: usize, alive: usize) -> bool {
        alive == 0
    }

    fn output(self, _tr: &Transcript) -> Self::Output {
        (
            EstimateVector {
                values: self.values,
                round_assigned: self.round_assigned,
                phase: None,
            },
            self.d_history,
        )
    }
}

/// A finished run of the exact protocol.
#[derive(Clone, Debug)]
pub struct ExactRun {
    pub estimates: EstimateVector,
    pub transcript: Transcript,
    /// Server level `d` after each round.
    pub d_history: Vec<f64>,
}

impl ExactRun {
    pub fn rounds(&self) -> usize {
        self.transcript.round_count()
    }
}

/// Runs the exact protocol: initial noise `Lap(4/ε)`, counters with budget
/// `ε/2` and horizon `n`, at most `n` rounds.
pub fn run_exact_core(g: &Graph, cfg: &RunConfig) -> Result<ExactRun> {
    cfg.validate()?;
    let n = g.vertex_count();
    let users = users_for(cfg, n, n)?;
    let max_rounds = cfg.max_rounds.unwrap_or(n.max(1));
    let (transcript, (estimates, d_history)) =
        run_protocol(g, max_rounds, ExactServer::new(n), users)?;
    Ok(ExactRun {
        estimates,
        transcript,
        d_history,
    })
}

/// Vertices that break `k(v) − α ≤ k̃(v) ≤ k(v) + α` or the upper-set
/// degree clause for the given `α`.
pub fn robustness_violations(
    g: &Graph,
    coreness: &[usize],
    est: &EstimateVector,
    alpha: f64,
) -> Vec<usize> {
    band_violations(g, coreness, est, 1.0, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{CounterConfig, CounterKind};
    use crate::generators::{gen_gnp, gen_path};
    use crate::graph::exact_coreness;

    fn msgs(pairs: &[(usize, f64)]) -> VertexValues {
        pairs.iter().copied().collect()
    }

    #[test]
    fn server_step_examples() {
        let m = msgs(&[(0, 3.0), (1, 3.0), (2, 1.0)]);
        assert_eq!(
            exact_server_step(0.0, &[0, 1, 2], &m).unwrap(),
            (1.0, vec![2])
        );

        let m = msgs(&[(0, 3.0), (1, 4.0)]);
        assert_eq!(
            exact_server_step(5.0, &[0, 1], &m).unwrap(),
            (5.0, vec![0, 1])
        );

        let m = msgs(&[(7, 12.5)]);
        assert_eq!(exact_server_step(0.0, &[7], &m).unwrap(), (12.5, vec![7]));

        let m = msgs(&[(0, 3.0)]);
        assert!(matches!(
            exact_server_step(0.0, &[0, 1], &m),
            Err(Error::ProtocolViolation(_))
        ));
        assert!(exact_server_step(0.0, &[1], &m).is_err());
    }

    #[test]
    fn user_step_examples() {
        let off = NoiseSource::disabled();
        let cfg = CounterConfig::new(CounterKind::BinaryTree, 3, 0.5).unwrap();

        // No deleted neighbors: message is the current true degree.
        let mut c = AdaptiveCounter::new(&cfg, 1).unwrap();
        let m = exact_user_step(&[0, 2], &[5], &mut c, 2.0, &off).unwrap();
        assert_eq!(m.noisy_degree, 2.0);

        // Path 0-1-2 after S_1 = {0, 2}: the middle vertex sends 0.
        let mut c = AdaptiveCounter::new(&cfg, 1).unwrap();
        let m = exact_user_step(&[0, 2], &[0, 2], &mut c, 2.0, &off).unwrap();
        assert_eq!(m.noisy_degree, 0.0);
        assert_eq!(c.time(), 1);
    }

    #[test]
    fn k4_one_round() {
        let run = run_exact_core(&Graph::complete(4), &RunConfig::noiseless()).unwrap();
        assert_eq!(run.rounds(), 1);
        assert_eq!(run.estimates.values, vec![3.0; 4]);
    }

    #[test]
    fn path_peels_two_ends_per_round() {
        for n in [2usize, 5, 10, 17] {
            let g = gen_path(n).unwrap();
            let run = run_exact_core(&g, &RunConfig::noiseless()).unwrap();
            assert_eq!(run.rounds(), n.div_ceil(2), "n = {n}");
            assert!(run.estimates.values.iter().all(|&k| k == 1.0));
        }
    }

    #[test]
    fn noiseless_matches_oracle() {
        for seed in 0..30 {
            let g = gen_gnp(40, 0.15, seed).unwrap();
            let run = run_exact_core(&g, &RunConfig::noiseless()).unwrap();
            let truth: Vec<f64> = exact_coreness(&g).into_iter().map(|k| k as f64).collect();
            assert_eq!(run.estimates.values, truth, "seed {seed}");
            assert!(run.rounds() <= 40);
        }
    }

    #[test]
    fn one_counter_insertion_per_surviving_round() {
        let g = gen_gnp(30, 0.2, 2).unwrap();
        let cfg = RunConfig::default().with_seed(9);
        let run = run_exact_core(&g, &cfg).unwrap();
        // A vertex deleted in round r sent r messages, r − 1 of them counter
        // releases, each carrying exactly one new tree node.
        for v in g.vertices() {
            let r = run.estimates.round_assigned[v];
            let sent = run
                .transcript
                .rounds()
                .iter()
                .filter(|rd| rd.msgs.contains_key(v))
                .count();
            let nodes = run
                .transcript
                .rounds()
                .iter()
                .filter(|rd| rd.nodes.contains_key(v))
                .count();
            assert_eq!(sent, r);
            assert_eq!(nodes, r - 1);
        }
    }

    #[test]
    fn d_never_decreases_and_every_round_deletes() {
        let g = gen_gnp(60, 0.1, 5).unwrap();
        let run = run_exact_core(&g, &RunConfig::default().with_seed(1)).unwrap();
        assert!(run.d_history.windows(2).all(|w| w[0] <= w[1]));
        assert!(run
            .transcript
            .rounds()
            .iter()
            .all(|r| !r.deleted.is_empty()));
        assert!(run.rounds() <= 60);
    }

    #[test]
    fn empty_and_single_vertex_graphs() {
        let run = run_exact_core(&Graph::empty(0), &RunConfig::default()).unwrap();
        assert_eq!(run.rounds(), 0);
        let run = run_exact_core(&Graph::empty(1), &RunConfig::noiseless()).unwrap();
        assert_eq!(run.estimates.values, vec![0.0]);
    }

    #[test]
    fn estimate_csv_shape() {
        let g = Graph::complete(3);
        let run = run_exact_core(&g, &RunConfig::noiseless()).unwrap();
        let csv = run.estimates.to_csv(&exact_coreness(&g));
        assert_eq!(csv.lines().next().unwrap(), "vertex,k_true,k_est,round");
        assert_eq!(csv.lines().nth(1).unwrap(), "0,2,2,1");
    }
}
