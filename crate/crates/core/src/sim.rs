//! Round-based engine for local-model protocols.
//!
//! Each round every alive user sends one message, the server answers with
//! the set `S_t` of users to delete, and the round is appended to the
//! [`Transcript`]. Users see the transcript (the broadcast) and their own
//! neighborhood; in memoryless mode that is all they see.
//!
//! A user message carries the noisy degree `d̃_t(v)` and, from round 2 on,
//! the tree node its counter released that round. The node values are what
//! lets a memoryless user rebuild its counter from the broadcast alone.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::counting::{bt_state_from_history, CounterConfig, CounterKind};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::noise::{NoiseLabel, NoiseMode, NoiseSource};
use crate::values::VertexValues;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MemoryMode {
    /// Users keep no state between rounds and rebuild it from the transcript.
    Memoryless,
    /// Users keep their counters in local memory.
    Memoryful,
}

impl MemoryMode {
    pub fn name(self) -> &'static str {
        match self {
            MemoryMode::Memoryless => "memoryless",
            MemoryMode::Memoryful => "memoryful",
        }
    }
}

impl std::str::FromStr for MemoryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "memoryless" => Ok(MemoryMode::Memoryless),
            "memoryful" => Ok(MemoryMode::Memoryful),
            other => Err(Error::invalid(format!("unknown memory mode {other:?}"))),
        }
    }
}

/// Parameters shared by the coreness protocols.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Total privacy budget `ε`.
    pub epsilon: f64,
    pub memory: MemoryMode,
    pub counter: CounterKind,
    /// Approximation slack `η`; read by the approximate protocol only.
    pub eta: f64,
    pub seed: u64,
    pub noise: NoiseMode,
    /// Round cap; defaults to the protocol's own bound.
    pub max_rounds: Option<usize>,
    /// Overrides the rounds-per-phase of the approximate protocol.
    pub phase_rounds: Option<usize>,
    /// Refuse any configuration that is not actually private.
    pub assert_private: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            epsilon: 1.0,
            memory: MemoryMode::Memoryful,
            counter: CounterKind::BinaryTree,
            eta: 1.0,
            seed: 0,
            noise: NoiseMode::Laplace,
            max_rounds: None,
            phase_rounds: None,
            assert_private: false,
        }
    }
}

impl RunConfig {
    /// Noise-free configuration for oracle-equivalence runs.
    pub fn noiseless() -> Self {
        RunConfig {
            noise: NoiseMode::Disabled,
            ..RunConfig::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_memory(mut self, memory: MemoryMode) -> Self {
        self.memory = memory;
        self
    }

    pub fn with_counter(mut self, counter: CounterKind) -> Self {
        self.counter = counter;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn noise_source(&self) -> NoiseSource {
        NoiseSource::new(self.noise, self.seed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_rounds == Some(0) {
            return Err(Error::invalid("max_rounds must be at least 1"));
        }
        if self.assert_private {
            if self.noise == NoiseMode::Disabled {
                return Err(Error::invalid(
                    "noise is disabled but the run is flagged private",
                ));
            }
            if self.counter == CounterKind::ExactDebug {
                return Err(Error::invalid(
                    "the exact-debug counter is not private but the run is flagged private",
                ));
            }
        }
        if self.memory == MemoryMode::Memoryless && self.counter == CounterKind::SparseVector {
            return Err(Error::invalid(
                "the sparse-vector counter keeps a secret threshold and cannot run memoryless",
            ));
        }
        Ok(())
    }

    /// Laplace scale of the initial noisy degree: `4/ε`.
    pub fn initial_degree_scale(&self) -> f64 {
        4.0 / self.epsilon
    }

    /// Budget of each user's counter: `ε/2`.
    pub fn counter_epsilon(&self) -> f64 {
        self.epsilon / 2.0
    }

    /// Counter configuration for a graph on `n` vertices and the given horizon.
    pub fn counter_config(&self, n: usize, horizon: usize) -> Result<CounterConfig> {
        CounterConfig::new(self.counter, horizon.max(1), self.counter_epsilon())?
            .with_beta(1.0 / (n as f64 + 2.0))
    }
}

/// One user's message in one round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UserMessage {
    pub noisy_degree: f64,
    pub node: Option<f64>,
}

/// One round: the noisy degree of every participating user, the tree nodes
/// they released, and the server's deletion set `S_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: usize,
    pub msgs: VertexValues,
    #[serde(rename = "S")]
    pub deleted: Vec<usize>,
    #[serde(default, skip_serializing_if = "VertexValues::is_empty")]
    pub nodes: VertexValues,
}

/// Append-only record of a run. A vertex missing from a round's messages
/// sent nothing (`⊥`), which happens exactly when it was deleted earlier.
#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    n: usize,
    rounds: Vec<RoundRecord>,
    deleted_at: Vec<Option<usize>>,
    alive: usize,
}

impl Transcript {
    pub fn new(n: usize) -> Self {
        Transcript {
            n,
            rounds: Vec::new(),
            deleted_at: vec![None; n],
            alive: n,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn rounds(&self) -> &[RoundRecord] {
        &self.rounds
    }

    pub fn round_count(&self) -> usize {
        self.rounds.len()
    }

    /// Vertices not deleted in any recorded round.
    pub fn alive_count(&self) -> usize {
        self.alive
    }

    /// Round in which `v` was deleted, if it has been.
    pub fn deleted_at(&self, v: usize) -> Option<usize> {
        self.deleted_at.get(v).copied().flatten()
    }

    /// `true` if `v` sends a message in round `t`.
    pub fn alive_in(&self, v: usize, t: usize) -> bool {
        v < self.n && self.deleted_at(v).is_none_or(|r| r >= t)
    }

    /// Appends a round after checking the participation invariant.
    pub fn push(&mut self, round: RoundRecord) -> Result<()> {
        let t = self.rounds.len() + 1;
        if round.t != t {
            return Err(Error::CorruptTranscript(format!(
                "expected round {t}, got {}",
                round.t
            )));
        }
        for v in round.msgs.keys() {
            if !self.alive_in(v, t) {
                return Err(Error::CorruptTranscript(format!(
                    "vertex {v} sends in round {t} but is not alive"
                )));
            }
        }
        if round.msgs.len() != self.alive {
            let silent = (0..self.n)
                .find(|&v| self.alive_in(v, t) && !round.msgs.contains_key(v))
                .unwrap_or_default();
            return Err(Error::CorruptTranscript(format!(
                "alive vertex {silent} is silent in round {t}"
            )));
        }
        if round.deleted.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::CorruptTranscript(format!(
                "round {t} deletion set is not sorted and distinct"
            )));
        }
        for &v in &round.deleted {
            if !round.msgs.contains_key(v) {
                return Err(Error::CorruptTranscript(format!(
                    "round {t} deletes {v}, which did not participate"
                )));
            }
            self.deleted_at[v] = Some(t);
        }
        self.alive -= round.deleted.len();
        self.rounds.push(round);
        Ok(())
    }

    /// `|N_v ∩ S_r|` for `r = 1..upto`, from one pass over the neighbors.
    fn inputs_before(&self, neighbors: &[usize], upto: usize) -> Vec<u64> {
        let mut inputs = vec![0u64; upto.saturating_sub(1)];
        for &u in neighbors {
            if let Some(r) = self.deleted_at(u) {
                if r < upto {
                    inputs[r - 1] += 1;
                }
            }
        }
        inputs
    }

    /// One JSON object per round.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for round in &self.rounds {
            serde_json::to_writer(&mut out, round)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    /// Parses a JSON-lines dump for a graph on `n` vertices, re-checking
    /// every round.
    pub fn read_jsonl<R: BufRead>(reader: R, n: usize) -> Result<Self> {
        let mut tr = Transcript::new(n);
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let round: RoundRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: idx + 1,
                msg: e.to_string(),
            })?;
            tr.push(round)?;
        }
        Ok(tr)
    }
}

/// What a user can recover about its own counter from the broadcast.
#[derive(Clone, Debug, PartialEq)]
pub struct UserView {
    /// Its round-1 message `d̃_1(v)`, if round 1 has happened.
    pub initial_message: Option<f64>,
    /// Stream elements `|N_v ∩ S_r|` inserted so far.
    pub inputs: Vec<u64>,
    /// Tree nodes released so far, one per past insertion.
    pub nodes: Vec<f64>,
}

/// Extracts what `v` inserted into and received from its counter before
/// round `upto`: inputs from `S_1, …, S_{upto-2}` (the element derived from
/// `S_{upto-1}` is the one about to be inserted) and its released nodes.
pub fn transcript_replay_user_view(
    tr: &Transcript,
    v: usize,
    neighbors: &[usize],
    upto: usize,
) -> Result<UserView> {
    if upto == 0 || upto > tr.round_count() + 1 {
        return Err(Error::invalid(format!(
            "round {upto} is outside the transcript ({} rounds)",
            tr.round_count()
        )));
    }
    if !tr.alive_in(v, upto) {
        return Err(Error::invalid(format!(
            "vertex {v} is not alive in round {upto}"
        )));
    }
    if upto == 1 {
        return Ok(UserView {
            initial_message: None,
            inputs: Vec::new(),
            nodes: Vec::new(),
        });
    }
    let initial = tr.rounds[0].msgs.get(v);
    let inputs = tr.inputs_before(neighbors, upto - 1);
    let nodes = tr.rounds[1..upto - 1]
        .iter()
        .map(|r| r.nodes.get(v).unwrap_or(0.0))
        .collect();
    Ok(UserView {
        initial_message: initial,
        inputs,
        nodes,
    })
}

/// Server side of a protocol.
pub trait ServerLogic {
    type Output;

    /// Receives round `t`'s messages (exactly the alive users) and returns `S_t`.
    fn step(&mut self, t: usize, msgs: &VertexValues) -> Result<Vec<usize>>;

    /// Whether the interaction ends after round `t`, given who is still alive.
    fn finished(&self, t: usize, alive: usize) -> bool;

    fn output(self, transcript: &Transcript) -> Self::Output;
}

/// User side of a protocol, for every user at once. Implementations decide
/// what, if anything, persists between rounds.
pub trait UserLogic {
    fn message(
        &mut self,
        v: usize,
        neighbors: &[usize],
        t: usize,
        tr: &Transcript,
    ) -> Result<UserMessage>;
}

/// Runs server and users until the server ends the interaction.
pub fn run_protocol<S, U>(
    g: &Graph,
    max_rounds: usize,
    mut server: S,
    mut users: U,
) -> Result<(Transcript, S::Output)>
where
    S: ServerLogic,
    U: UserLogic,
{
    if max_rounds == 0 {
        return Err(Error::invalid("max_rounds must be at least 1"));
    }
    let n = g.vertex_count();
    let mut tr = Transcript::new(n);
    let mut alive: Vec<usize> = g.vertices().collect();
    if alive.is_empty() {
        return Ok((tr.clone(), server.output(&tr)));
    }
    for t in 1..=max_rounds {
        let mut msgs = VertexValues::with_capacity(alive.len());
        let mut nodes = VertexValues::with_capacity(if t > 1 { alive.len() } else { 0 });
        for &v in &alive {
            let m = users.message(v, g.neighbors(v), t, &tr)?;
            msgs.push(v, m.noisy_degree);
            if let Some(node) = m.node {
                nodes.push(v, node);
            }
        }
        let mut deleted = server.step(t, &msgs)?;
        deleted.sort_unstable();
        deleted.dedup();
        tr.push(RoundRecord {
            t,
            msgs,
            deleted,
            nodes,
        })?;
        alive.retain(|&v| tr.deleted_at(v).is_none());
        if server.finished(t, alive.len()) {
            let out = server.output(&tr);
            return Ok((tr, out));
        }
    }
    Err(Error::Divergence { max_rounds })
}

/// Users that keep `d̃_1(v)` and their counter `𝒞_v` in local memory.
pub struct MemoryfulUsers {
    cfg: CounterConfig,
    initial_scale: f64,
    noise: NoiseSource,
    state: Vec<Option<(f64, crate::counting::AdaptiveCounter)>>,
}

impl MemoryfulUsers {
    pub fn new(n: usize, cfg: CounterConfig, initial_scale: f64, noise: NoiseSource) -> Self {
        MemoryfulUsers {
            cfg,
            initial_scale,
            noise,
            state: vec![None; n],
        }
    }
}

impl UserLogic for MemoryfulUsers {
    fn message(
        &mut self,
        v: usize,
        neighbors: &[usize],
        t: usize,
        tr: &Transcript,
    ) -> Result<UserMessage> {
        if t == 1 {
            let d1 = initial_noisy_degree(neighbors.len(), self.initial_scale, &self.noise, v);
            self.state[v] = Some((d1, crate::counting::AdaptiveCounter::new(&self.cfg, v)?));
            return Ok(UserMessage {
                noisy_degree: d1,
                node: None,
            });
        }
        let (d1, counter) = self.state[v]
            .as_mut()
            .ok_or_else(|| Error::ProtocolViolation(format!("vertex {v} skipped round 1")))?;
        let x = deleted_neighbors_in(tr, neighbors, t - 1);
        let release = counter.insert(x, &self.noise)?;
        Ok(UserMessage {
            noisy_degree: *d1 - release.sum,
            node: release.node.map(|(_, value)| value),
        })
    }
}

/// Users that store nothing: each round they rebuild `d̃_1(v)` and their
/// counter from the transcript, then simulate one insertion.
pub struct MemorylessUsers {
    cfg: CounterConfig,
    initial_scale: f64,
    noise: NoiseSource,
}

impl MemorylessUsers {
    pub fn new(cfg: CounterConfig, initial_scale: f64, noise: NoiseSource) -> Result<Self> {
        if cfg.kind == CounterKind::SparseVector {
            return Err(Error::invalid(
                "the sparse-vector counter cannot run memoryless",
            ));
        }
        Ok(MemorylessUsers {
            cfg,
            initial_scale,
            noise,
        })
    }
}

impl UserLogic for MemorylessUsers {
    fn message(
        &mut self,
        v: usize,
        neighbors: &[usize],
        t: usize,
        tr: &Transcript,
    ) -> Result<UserMessage> {
        if t == 1 {
            return Ok(UserMessage {
                noisy_degree: initial_noisy_degree(
                    neighbors.len(),
                    self.initial_scale,
                    &self.noise,
                    v,
                ),
                node: None,
            });
        }
        let view = transcript_replay_user_view(tr, v, neighbors, t)?;
        let d1 = view
            .initial_message
            .ok_or_else(|| Error::CorruptTranscript(format!("no round-1 message from {v}")))?;
        let x = deleted_neighbors_in(tr, neighbors, t - 1);
        match self.cfg.kind {
            CounterKind::BinaryTree => {
                let mut state = bt_state_from_history(&view.inputs, &view.nodes, &self.cfg, v)?;
                let release = state.insert(x, &self.noise)?;
                Ok(UserMessage {
                    noisy_degree: d1 - release.sum,
                    node: release.node.map(|(_, value)| value),
                })
            }
            CounterKind::ExactDebug => {
                let sum: u64 = view.inputs.iter().sum::<u64>() + x;
                Ok(UserMessage {
                    noisy_degree: d1 - sum as f64,
                    node: None,
                })
            }
            CounterKind::SparseVector => unreachable!("rejected in MemorylessUsers::new"),
        }
    }
}

/// `|N_v| + Lap(scale)`.
pub fn initial_noisy_degree(degree: usize, scale: f64, noise: &NoiseSource, v: usize) -> f64 {
    degree as f64 + noise.sample_laplace(scale, NoiseLabel::InitialDegree { vertex: v })
}

/// `|N_v ∩ S_r|`.
pub fn deleted_neighbors_in(tr: &Transcript, neighbors: &[usize], r: usize) -> u64 {
    neighbors
        .iter()
        .filter(|&&u| tr.deleted_at(u) == Some(r))
        .count() as u64
}

/// Builds the user side selected by `cfg` for a counter horizon.
pub fn users_for(cfg: &RunConfig, n: usize, horizon: usize) -> Result<Box<dyn UserLogic>> {
    let counter = cfg.counter_config(n, horizon)?;
    let noise = cfg.noise_source();
    Ok(match cfg.memory {
        MemoryMode::Memoryful => Box::new(MemoryfulUsers::new(
            n,
            counter,
            cfg.initial_degree_scale(),
            noise,
        )),
        MemoryMode::Memoryless => Box::new(MemorylessUsers::new(
            counter,
            cfg.initial_degree_scale(),
            noise,
        )?),
    })
}

impl UserLogic for Box<dyn UserLogic> {
    fn message(
        &mut self,
        v: usize,
        neighbors: &[usize],
        t: usize,
        tr: &Transcript,
    ) -> Result<UserMessage> {
        (**self).message(v, neighbors, t, tr)
    }
}

/// True degree of every vertex alive at the start of round `t`, as implied
/// by the graph and the deletions `S_1, …, S_{t-1}`.
pub fn true_degrees_at(g: &Graph, tr: &Transcript, t: usize) -> BTreeMap<usize, usize> {
    g.vertices()
        .filter(|&v| tr.alive_in(v, t))
        .map(|v| {
            let d = g
                .neighbors(v)
                .iter()
                .filter(|&&u| tr.alive_in(u, t))
                .count();
            (v, d)
        })
        .collect()
}
