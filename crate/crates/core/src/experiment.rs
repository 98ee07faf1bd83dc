//! Seeded parameter sweeps producing one CSV row per run.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::approx::run_approx_core;
use crate::audit::measure_alpha_obs;
use crate::counting::CounterKind;
use crate::error::{Error, Result};
use crate::exact::run_exact_core;
use crate::generators::{gen_gnp, gen_path, gen_regular};
use crate::graph::{exact_coreness, Graph};
use crate::noise::{NoiseMode, NoiseSource};
use crate::sim::{MemoryMode, RunConfig};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    /// `G(n, d/n)`: expected average degree about `d`.
    Gnp {
        avg_degree: f64,
    },
    Regular {
        degree: usize,
    },
    Path,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gnp { .. } => "gnp",
            Family::Regular { .. } => "regular",
            Family::Path => "path",
        }
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<Graph> {
        match *self {
            Family::Gnp { avg_degree } => gen_gnp(n, (avg_degree / n as f64).min(1.0), seed),
            Family::Regular { degree } => gen_regular(n, degree, seed),
            Family::Path => gen_path(n),
        }
    }
}

/// Parses `gnp:<avg-degree>`, `regular:<d>` or `path`.
impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((name, arg)) => (name, Some(arg)),
            None => (s, None),
        };
        let bad = || Error::invalid(format!("bad graph family {s:?}"));
        match (name, arg) {
            ("gnp", Some(a)) => Ok(Family::Gnp {
                avg_degree: a.parse().map_err(|_| bad())?,
            }),
            ("regular", Some(a)) => Ok(Family::Regular {
                degree: a.parse().map_err(|_| bad())?,
            }),
            ("path", None) => Ok(Family::Path),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    Exact,
    Approx,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Exact => "exact",
            Protocol::Approx => "approx",
        }
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Protocol::Exact),
            "approx" => Ok(Protocol::Approx),
            other => Err(Error::invalid(format!("unknown protocol {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub sizes: Vec<usize>,
    pub family: Family,
    pub epsilons: Vec<f64>,
    pub eta: f64,
    pub counter: CounterKind,
    pub memory: MemoryMode,
    pub protocols: Vec<Protocol>,
    pub trials: usize,
    pub seed: u64,
    pub noise: NoiseMode,
    /// Fill the `ms` column with wall time; otherwise it is 0 so that
    /// output files are reproducible.
    pub timing: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.sizes.is_empty() || self.epsilons.is_empty() || self.protocols.is_empty() {
            return Err(Error::invalid(
                "sizes, epsilons and protocols must be nonempty",
            ));
        }
        for &n in &self.sizes {
            if n == 0 {
                return Err(Error::invalid("graph size must be positive"));
            }
        }
        for &eps in &self.epsilons {
            self.run_config(eps, 0).validate()?;
        }
        Ok(())
    }

    fn run_config(&self, epsilon: f64, seed: u64) -> RunConfig {
        RunConfig {
            epsilon,
            memory: self.memory,
            counter: self.counter,
            eta: self.eta,
            seed,
            noise: self.noise,
            ..RunConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub family: String,
    pub n: usize,
    pub eps: f64,
    pub eta: f64,
    pub counter: String,
    pub memory: String,
    pub trial: usize,
    pub protocol: String,
    /// Exact: `max |k̃ − k|`. Approx: largest distance outside `[k, (2+η)k]`.
    pub max_err: f64,
    pub rounds: usize,
    pub alpha_obs: f64,
    pub ms: u64,
}

/// Runs every `(n, trial, ε, protocol)` combination. Each `(n, trial)` pair
/// gets its own graph, shared across `ε` and protocols. Rows come back in
/// a fixed order regardless of thread scheduling.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let root = NoiseSource::laplace(spec.seed);
    let jobs: Vec<(usize, usize)> = spec
        .sizes
        .iter()
        .flat_map(|&n| (0..spec.trials).map(move |trial| (n, trial)))
        .collect();
    let rows: Vec<Vec<SweepRow>> = jobs
        .par_iter()
        .map(|&(n, trial)| {
            let graph_seed = root.derive(n as u64).derive(trial as u64).key();
            let g = spec.family.generate(n, graph_seed)?;
            let truth = exact_coreness(&g);
            let mut out = Vec::new();
            for (ei, &eps) in spec.epsilons.iter().enumerate() {
                let noise_seed = root.derive(graph_seed).derive(ei as u64).key();
                let cfg = spec.run_config(eps, noise_seed);
                for &protocol in &spec.protocols {
                    let start = Instant::now();
                    let (max_err, tr) = match protocol {
                        Protocol::Exact => {
                            let run = run_exact_core(&g, &cfg)?;
                            (run.estimates.max_abs_error(&truth), run.transcript)
                        }
                        Protocol::Approx => {
                            let run = run_approx_core(&g, &cfg)?;
                            (
                                run.estimates.max_band_excess(&truth, 2.0 + spec.eta),
                                run.transcript,
                            )
                        }
                    };
                    let ms = if spec.timing {
                        start.elapsed().as_millis() as u64
                    } else {
                        0
                    };
                    out.push(SweepRow {
                        family: spec.family.name().into(),
                        n,
                        eps,
                        eta: spec.eta,
                        counter: spec.counter.name().into(),
                        memory: spec.memory.name().into(),
                        trial,
                        protocol: protocol.name().into(),
                        max_err,
                        rounds: tr.round_count(),
                        alpha_obs: measure_alpha_obs(&tr, &g)?,
                        ms,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::invalid(format!("csv: {other:?}")),
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

/// Least-squares fit of `y = c·(ln n)²` through the origin. Returns `c` and
/// the coefficient of determination `R² = 1 − SS_res/SS_tot`.
pub fn log_squared_fit(points: &[(usize, f64)]) -> (f64, f64) {
    let xs: Vec<f64> = points
        .iter()
        .map(|&(n, _)| (n as f64).ln().powi(2))
        .collect();
    let ys: Vec<f64> = points.iter().map(|&(_, y)| y).collect();
    let c =
        xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / xs.iter().map(|x| x * x).sum::<f64>();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - c * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let r2 = if ss_tot == 0.0 {
        f64::from(ss_res == 0.0)
    } else {
        1.0 - ss_res / ss_tot
    };
    (c, r2)
}
