//! Densest subgraph by post-processing coreness estimates: return every
//! vertex whose estimate equals the maximum estimate.
//!
//! The returned set depends on the estimates alone. Its density is then
//! measured on the true graph, which is an evaluation-only quantity that a
//! real deployment would never learn.

use serde::Serialize;

use crate::approx::run_approx_core;
use crate::error::{Error, Result};
use crate::estimate::{band_violations, EstimateVector};
use crate::exact::run_exact_core;
use crate::graph::{Density, Graph};
use crate::sim::RunConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DensestMode {
    Exact,
    Approx,
}

impl std::str::FromStr for DensestMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(DensestMode::Exact),
            "approx" => Ok(DensestMode::Approx),
            other => Err(Error::invalid(format!("unknown densest mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensestResult {
    pub subset: Vec<usize>,
    #[serde(serialize_with = "ser_ratio")]
    pub achieved_density: Density,
    pub k_tilde_star: f64,
}

fn ser_ratio<S: serde::Serializer>(r: &Density, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(ratio_to_f64(r))
}

/// The subset `{v : k̃(v) = max k̃}` (exact float equality), plus its density
/// in `g`.
pub fn densest_from_estimates(g: &Graph, est: &EstimateVector) -> Result<DensestResult> {
    if est.is_empty() {
        return Err(Error::invalid("empty estimate vector"));
    }
    if est.len() != g.vertex_count() {
        return Err(Error::invalid(format!(
            "{} estimates for {} vertices",
            est.len(),
            g.vertex_count()
        )));
    }
    if est.values.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("estimate vector contains NaN"));
    }
    let k_tilde_star = est.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let subset: Vec<usize> = (0..est.len())
        .filter(|&v| est.values[v] == k_tilde_star)
        .collect();
    let achieved_density = g.induced_subgraph(&subset)?.density()?;
    Ok(DensestResult {
        subset,
        achieved_density,
        k_tilde_star,
    })
}

pub fn run_densest(g: &Graph, cfg: &RunConfig, mode: DensestMode) -> Result<DensestResult> {
    let est = match mode {
        DensestMode::Exact => run_exact_core(g, cfg)?.estimates,
        DensestMode::Approx => run_approx_core(g, cfg)?.estimates,
    };
    densest_from_estimates(g, &est)
}

/// Density floor implied by accuracy with ratio `γ` and additive error
/// `α`: if every estimate satisfies both statements checked by
/// [`band_violations`], then `G[Ũ*]` has density at least
/// `k*/(2γ) − (1 + 1/γ)·α/2`. Returns `None` when the hypotheses fail.
pub fn density_lower_bound(
    g: &Graph,
    coreness: &[usize],
    est: &EstimateVector,
    gamma: f64,
    alpha: f64,
) -> Option<f64> {
    if !band_violations(g, coreness, est, gamma, alpha).is_empty() {
        return None;
    }
    let k_star = coreness.iter().copied().max().unwrap_or(0) as f64;
    Some(k_star / (2.0 * gamma) - (1.0 + 1.0 / gamma) * alpha / 2.0)
}

/// `r` as a float, for comparisons against real-valued bounds.
pub fn ratio_to_f64(r: &Density) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}
