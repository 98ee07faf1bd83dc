//! Adaptive continual counters.
//!
//! Every user keeps one counter and feeds it the per-round drop in its degree.
//! Three kinds share the [`AdaptiveCounter`] interface:
//!
//! * [`BinaryTreeState`]: the binary tree mechanism. Time step `t` releases
//!   exactly one new dyadic node (at the level of the lowest set bit of `t`)
//!   and reports the sum of the nodes named by the set bits of `t`.
//! * [`SparseVectorState`]: an above-threshold test cuts the stream into
//!   segments whose true count crosses a noisy margin; only segment totals
//!   enter an inner binary tree, so error tracks the true count rather than
//!   the stream length.
//! * [`ExactDebugState`]: noiseless prefix sums for tracing.
//!
//! The binary tree state is a function of its inputs and released node
//! values alone, which is what makes it reconstructible by a memoryless
//! user; see [`bt_state_from_history`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{NoiseLabel, NoiseSource};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CounterKind {
    BinaryTree,
    SparseVector,
    ExactDebug,
}

impl CounterKind {
    pub fn name(self) -> &'static str {
        match self {
            CounterKind::BinaryTree => "binary-tree",
            CounterKind::SparseVector => "sparse-vector",
            CounterKind::ExactDebug => "exact-debug",
        }
    }
}

impl std::str::FromStr for CounterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary-tree" => Ok(CounterKind::BinaryTree),
            "sparse-vector" => Ok(CounterKind::SparseVector),
            "exact-debug" => Ok(CounterKind::ExactDebug),
            other => Err(Error::invalid(format!("unknown counter kind {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CounterConfig {
    /// Maximum number of insertions `T`.
    pub horizon: usize,
    /// Privacy budget of this counter alone.
    pub epsilon: f64,
    pub kind: CounterKind,
    /// Failure probability used for reported error bounds and for the
    /// sparse-vector margin.
    pub beta: f64,
}

impl CounterConfig {
    pub fn new(kind: CounterKind, horizon: usize, epsilon: f64) -> Result<Self> {
        let cfg = CounterConfig {
            horizon,
            epsilon,
            kind,
            beta: 0.01,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        self.beta = beta;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid("counter horizon must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!(
                "counter epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::invalid(format!("beta {} not in (0, 1)", self.beta)));
        }
        Ok(())
    }
}

/// Number of tree levels a stream of length `horizon` can touch:
/// `⌊log₂ T⌋ + 1`. One input lies under at most one node per level.
pub fn tree_levels(horizon: usize) -> u32 {
    assert!(horizon >= 1);
    usize::BITS - horizon.leading_zeros()
}

/// `⌈log₂ T⌉`, the tree height.
pub fn tree_height(horizon: usize) -> u32 {
    assert!(horizon >= 1);
    usize::BITS - (horizon - 1).leading_zeros()
}

/// Laplace scale of a single tree node for a counter with this horizon and budget.
pub fn node_noise_scale(horizon: usize, epsilon: f64) -> f64 {
    tree_levels(horizon) as f64 / epsilon
}

/// What one insertion released.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Release {
    /// Noisy prefix sum after this insertion.
    pub sum: f64,
    /// Newly materialized tree node `(level, noisy value)`, when the counter
    /// has one to report.
    pub node: Option<(u32, f64)>,
}

/// Binary tree mechanism state after `t` insertions.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryTreeState {
    horizon: usize,
    epsilon: f64,
    stream: usize,
    t: u64,
    /// True dyadic partial sums, indexed by level.
    alpha: Vec<u64>,
    /// Noisy partial sums, indexed by level.
    alpha_hat: Vec<f64>,
}

impl BinaryTreeState {
    /// Fresh counter. `stream` names the owner and keys its noise labels.
    pub fn new(horizon: usize, epsilon: f64, stream: usize) -> Result<Self> {
        CounterConfig::new(CounterKind::BinaryTree, horizon, epsilon)?;
        let levels = tree_levels(horizon) as usize;
        Ok(BinaryTreeState {
            horizon,
            epsilon,
            stream,
            t: 0,
            alpha: vec![0; levels],
            alpha_hat: vec![0.0; levels],
        })
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn levels(&self) -> u32 {
        self.alpha.len() as u32
    }

    pub fn noise_scale(&self) -> f64 {
        node_noise_scale(self.horizon, self.epsilon)
    }

    pub fn alpha(&self) -> &[u64] {
        &self.alpha
    }

    pub fn alpha_hat(&self) -> &[f64] {
        &self.alpha_hat
    }

    /// Noisy prefix sum currently on release.
    pub fn current_sum(&self) -> f64 {
        release_sum(&self.alpha_hat, self.t)
    }

    /// Inserts `x` as step `t + 1`.
    ///
    /// The node at level `i` (lowest set bit of the new `t`) absorbs `x`
    /// plus every stored lower level, receives fresh `Lap(L/ε)` noise, and
    /// the lower levels are cleared.
    pub fn insert(&mut self, x: u64, noise: &NoiseSource) -> Result<Release> {
        let (level, true_value) = self.advance(x)?;
        let label = NoiseLabel::TreeNode {
            stream: self.stream,
            level,
            epoch: self.t >> level,
        };
        let value = true_value as f64 + noise.sample_laplace(self.noise_scale(), label);
        self.alpha_hat[level as usize] = value;
        Ok(Release {
            sum: self.current_sum(),
            node: Some((level, value)),
        })
    }

    /// Advances time and the true partial sums; leaves the new noisy node to
    /// the caller. Returns `(level, α_level)`.
    fn advance(&mut self, x: u64) -> Result<(u32, u64)> {
        if self.t as usize >= self.horizon {
            return Err(Error::StreamOverflow {
                horizon: self.horizon,
            });
        }
        self.t += 1;
        let level = self.t.trailing_zeros();
        let i = level as usize;
        let below: u64 = self.alpha[..i].iter().sum();
        self.alpha[i] = x + below;
        for j in 0..i {
            self.alpha[j] = 0;
            self.alpha_hat[j] = 0.0;
        }
        Ok((level, self.alpha[i]))
    }
}

/// `Σ_{j ∈ bin(t)} α̂_j`, summed from the highest level down.
pub fn release_sum(alpha_hat: &[f64], t: u64) -> f64 {
    (0..alpha_hat.len())
        .rev()
        .filter(|&j| (t >> j) & 1 == 1)
        .map(|j| alpha_hat[j])
        .sum()
}

/// Rebuilds a binary tree state from its history: the stream elements
/// inserted so far and the noisy node value released at each step.
///
/// The result equals the state a memoryful counter holds after the same
/// history, so the next insertion on either produces the same release.
pub fn bt_state_from_history(
    inputs: &[u64],
    node_outputs: &[f64],
    cfg: &CounterConfig,
    stream: usize,
) -> Result<BinaryTreeState> {
    if inputs.len() != node_outputs.len() {
        return Err(Error::CorruptTranscript(format!(
            "{} inputs but {} node outputs",
            inputs.len(),
            node_outputs.len()
        )));
    }
    let mut state = BinaryTreeState::new(cfg.horizon, cfg.epsilon, stream)?;
    for (&x, &node) in inputs.iter().zip(node_outputs) {
        let (level, _) = state.advance(x)?;
        state.alpha_hat[level as usize] = node;
    }
    Ok(state)
}

/// High-probability bound on `|released − true|` at step `t` for a tree
/// counter of the given horizon: a union bound over the at most
/// `k = 1 + ⌈log₂ t⌉` summed nodes, each `Lap(L/ε)`.
pub fn bt_error_bound_with_horizon(horizon: usize, t: usize, beta: f64, epsilon: f64) -> f64 {
    assert!(t >= 1 && beta > 0.0 && beta < 1.0 && epsilon > 0.0);
    let k = 1.0 + tree_height(t) as f64;
    node_noise_scale(horizon, epsilon) * k * (k / beta).ln()
}

/// [`bt_error_bound_with_horizon`] for a counter whose horizon is `t` itself.
pub fn bt_error_bound(t: usize, beta: f64, epsilon: f64) -> f64 {
    bt_error_bound_with_horizon(t, t, beta, epsilon)
}

/// True node values `(level, epoch) → α` that the tree materializes over
/// `inputs`, computed directly from the dyadic block sums.
pub fn tree_node_values(inputs: &[u64]) -> BTreeMap<(u32, u64), u64> {
    (1..=inputs.len() as u64)
        .map(|t| {
            let level = t.trailing_zeros();
            let start = t - (1 << level) + 1;
            let sum = (start..=t).map(|s| inputs[(s - 1) as usize]).sum();
            ((level, t >> level), sum)
        })
        .collect()
}

/// Sparse-vector counter.
///
/// Half the budget runs repeated above-threshold tests on the true count of
/// the open segment, with margin `(4/ε₁) ln(T/β)`; each firing closes the
/// segment and inserts its total into a binary tree holding the other half.
/// The release is the tree's prefix sum, so the open segment is not counted
/// until it closes. With noise disabled the margin is zero and every nonzero
/// element closes a segment, which yields exact prefix sums.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseVectorState {
    horizon: usize,
    epsilon: f64,
    beta: f64,
    stream: usize,
    t: u64,
    segment: u64,
    open_count: u64,
    tree: BinaryTreeState,
}

impl SparseVectorState {
    pub fn new(cfg: &CounterConfig, stream: usize) -> Result<Self> {
        cfg.validate()?;
        Ok(SparseVectorState {
            horizon: cfg.horizon,
            epsilon: cfg.epsilon,
            beta: cfg.beta,
            stream,
            t: 0,
            segment: 0,
            open_count: 0,
            tree: BinaryTreeState::new(cfg.horizon, cfg.epsilon / 2.0, stream)?,
        })
    }

    fn svt_epsilon(&self) -> f64 {
        self.epsilon / 2.0
    }

    /// Threshold margin before noise.
    pub fn margin(&self, noise: &NoiseSource) -> f64 {
        if noise.is_disabled() {
            0.0
        } else {
            4.0 / self.svt_epsilon() * (self.horizon as f64 / self.beta).ln()
        }
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    /// Number of closed segments so far.
    pub fn segments(&self) -> u64 {
        self.segment
    }

    pub fn insert(&mut self, x: u64, noise: &NoiseSource) -> Result<Release> {
        if self.t as usize >= self.horizon {
            return Err(Error::StreamOverflow {
                horizon: self.horizon,
            });
        }
        self.t += 1;
        self.open_count += x;
        let eps1 = self.svt_epsilon();
        let threshold = self.margin(noise)
            + noise.sample_laplace(
                2.0 / eps1,
                NoiseLabel::SvThreshold {
                    stream: self.stream,
                    segment: self.segment,
                },
            );
        let query = self.open_count as f64
            + noise.sample_laplace(
                4.0 / eps1,
                NoiseLabel::SvQuery {
                    stream: self.stream,
                    step: self.t,
                },
            );
        if query > threshold {
            let total = std::mem::take(&mut self.open_count);
            self.segment += 1;
            let release = self.tree.insert(total, noise)?;
            return Ok(Release {
                sum: release.sum,
                node: None,
            });
        }
        Ok(Release {
            sum: self.tree.current_sum(),
            node: None,
        })
    }
}

/// Noiseless prefix sums.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExactDebugState {
    horizon: usize,
    t: u64,
    sum: u64,
}

impl ExactDebugState {
    pub fn new(horizon: usize) -> Self {
        ExactDebugState {
            horizon,
            t: 0,
            sum: 0,
        }
    }

    pub fn insert(&mut self, x: u64) -> Result<Release> {
        if self.t as usize >= self.horizon {
            return Err(Error::StreamOverflow {
                horizon: self.horizon,
            });
        }
        self.t += 1;
        self.sum += x;
        Ok(Release {
            sum: self.sum as f64,
            node: None,
        })
    }
}

/// One user's counter `𝒞_v`.
#[derive(Clone, Debug, PartialEq)]
pub enum AdaptiveCounter {
    BinaryTree(BinaryTreeState),
    SparseVector(SparseVectorState),
    ExactDebug(ExactDebugState),
}

impl AdaptiveCounter {
    pub fn new(cfg: &CounterConfig, stream: usize) -> Result<Self> {
        cfg.validate()?;
        Ok(match cfg.kind {
            CounterKind::BinaryTree => {
                AdaptiveCounter::BinaryTree(BinaryTreeState::new(cfg.horizon, cfg.epsilon, stream)?)
            }
            CounterKind::SparseVector => {
                AdaptiveCounter::SparseVector(SparseVectorState::new(cfg, stream)?)
            }
            CounterKind::ExactDebug => {
                AdaptiveCounter::ExactDebug(ExactDebugState::new(cfg.horizon))
            }
        })
    }

    pub fn insert(&mut self, x: u64, noise: &NoiseSource) -> Result<Release> {
        match self {
            AdaptiveCounter::BinaryTree(s) => s.insert(x, noise),
            AdaptiveCounter::SparseVector(s) => s.insert(x, noise),
            AdaptiveCounter::ExactDebug(s) => s.insert(x),
        }
    }

    pub fn time(&self) -> u64 {
        match self {
            AdaptiveCounter::BinaryTree(s) => s.time(),
            AdaptiveCounter::SparseVector(s) => s.time(),
            AdaptiveCounter::ExactDebug(s) => s.t,
        }
    }
}
