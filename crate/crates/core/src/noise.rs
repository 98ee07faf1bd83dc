//! Laplace noise with labeled, reproducible substreams.
//!
//! A [`NoiseSource`] is immutable configuration: a master key and a mode.
//! Each draw is a pure function of `(key, label)`, so two runs that ask for
//! the same label get the same noise. That is what couples a memoryless user
//! with a memoryful one, and a run on `G` with a run on its neighbor `G'`.
//!
//! Draws use the inverse CDF applied to a uniform on the open unit interval
//! (53 bits of precision), from a Xoshiro256++ generator seeded per label.
//! That is fast and statistically sound for simulation, but neither the
//! generator nor floating-point Laplace sampling is fit for a deployment
//! that has to resist an actual adversary.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    Laplace,
    /// Every draw is exactly zero. Debug and oracle-equivalence runs only.
    Disabled,
}

impl NoiseMode {
    pub fn name(self) -> &'static str {
        match self {
            NoiseMode::Laplace => "laplace",
            NoiseMode::Disabled => "disabled",
        }
    }
}

impl std::str::FromStr for NoiseMode {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s {
            "laplace" => Ok(NoiseMode::Laplace),
            "disabled" => Ok(NoiseMode::Disabled),
            other => Err(crate::error::Error::InvalidInput(format!(
                "unknown noise mode {other:?}"
            ))),
        }
    }
}

/// Identifies one noise draw. Labels that differ in any field give
/// independent draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NoiseLabel {
    /// Laplace perturbation of a user's initial degree.
    InitialDegree { vertex: usize },
    /// Binary tree node at `level`, covering inputs `(epoch-1)·2^level+1 ..= epoch·2^level`.
    TreeNode {
        stream: usize,
        level: u32,
        epoch: u64,
    },
    /// Sparse-vector threshold noise for one segment.
    SvThreshold { stream: usize, segment: u64 },
    /// Sparse-vector per-step query noise.
    SvQuery { stream: usize, step: u64 },
    /// Free-form label for harnesses and tests.
    Custom { tag: u64, index: u64 },
}

impl NoiseLabel {
    fn words(self) -> [u64; 4] {
        match self {
            NoiseLabel::InitialDegree { vertex } => [1, vertex as u64, 0, 0],
            NoiseLabel::TreeNode {
                stream,
                level,
                epoch,
            } => [2, stream as u64, level as u64, epoch],
            NoiseLabel::SvThreshold { stream, segment } => [3, stream as u64, segment, 0],
            NoiseLabel::SvQuery { stream, step } => [4, stream as u64, step, 0],
            NoiseLabel::Custom { tag, index } => [5, tag, index, 0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseSource {
    mode: NoiseMode,
    key: u64,
}

impl NoiseSource {
    pub fn laplace(key: u64) -> Self {
        NoiseSource {
            mode: NoiseMode::Laplace,
            key,
        }
    }

    pub fn disabled() -> Self {
        NoiseSource {
            mode: NoiseMode::Disabled,
            key: 0,
        }
    }

    pub fn new(mode: NoiseMode, key: u64) -> Self {
        NoiseSource { mode, key }
    }

    pub fn mode(&self) -> NoiseMode {
        self.mode
    }

    pub fn is_disabled(&self) -> bool {
        self.mode == NoiseMode::Disabled
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Independent source for a sub-experiment (one trial, one graph, ...).
    pub fn derive(&self, tag: u64) -> Self {
        NoiseSource {
            mode: self.mode,
            key: mix(self.key ^ 0x5eed_5eed_5eed_5eed, tag),
        }
    }

    /// Uniform on `(0, 1)` for `label`.
    pub fn uniform(&self, label: NoiseLabel) -> f64 {
        self.rng(label).sample(Open01)
    }

    /// A general-purpose generator seeded from `label`.
    pub fn rng(&self, label: NoiseLabel) -> Xoshiro256PlusPlus {
        let seed = label.words().iter().fold(self.key, |h, &w| mix(h, w));
        Xoshiro256PlusPlus::seed_from_u64(seed)
    }

    /// One draw from `Lap(scale)`, or `0.0` when disabled.
    ///
    /// Panics if `scale` is not positive and finite in Laplace mode.
    pub fn sample_laplace(&self, scale: f64, label: NoiseLabel) -> f64 {
        match self.mode {
            NoiseMode::Disabled => 0.0,
            NoiseMode::Laplace => {
                assert!(
                    scale > 0.0 && scale.is_finite(),
                    "Laplace scale must be positive, got {scale}"
                );
                laplace_inverse_cdf(self.uniform(label), scale)
            }
        }
    }
}

/// Inverse CDF of `Lap(scale)` at `u ∈ (0, 1)`.
pub fn laplace_inverse_cdf(u: f64, scale: f64) -> f64 {
    let centered = u - 0.5;
    -scale * centered.signum() * (1.0 - 2.0 * centered.abs()).ln()
}

/// `b · ln(1/β)`: `Pr[|Lap(b)| > radius] = β` exactly.
pub fn tail_radius(scale: f64, beta: f64) -> f64 {
    assert!(
        beta > 0.0 && beta < 1.0,
        "tail probability must lie in (0, 1)"
    );
    scale * (1.0 / beta).ln()
}

fn mix(h: u64, w: u64) -> u64 {
    // splitmix64 finalizer over the running state.
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15).rotate_left(17)
        ^ w.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
