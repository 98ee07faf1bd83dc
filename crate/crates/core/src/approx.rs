//! The phase-structured `(2+η)`-approximate coreness protocol.
//!
//! Rounds are grouped into `Φ` phases of `R` rounds. In every round of phase
//! `φ` the server deletes each alive user whose noisy degree is at most
//! `(2+η)^φ` and labels it with that threshold. Users behave exactly as in
//! the exact protocol, but their counters only need horizon `Φ·R`, which is
//! polylogarithmic in `n`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{band_violations, EstimateVector};
use crate::graph::Graph;
use crate::sim::{run_protocol, users_for, RunConfig, ServerLogic, Transcript};
use crate::values::VertexValues;

/// Phase layout for a graph size and slack `η`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseSchedule {
    pub eta: f64,
    /// Number of phases `Φ = ⌈log_{2+η} n⌉ + 1`.
    pub phases: usize,
    /// Rounds per phase: the least `R` with `(1 + η/2)^R ≥ n + 1`, unless
    /// overridden.
    pub rounds_per_phase: usize,
    /// `thresholds[φ-1] = (2+η)^φ`.
    pub thresholds: Vec<f64>,
}

impl PhaseSchedule {
    pub fn total_rounds(&self) -> usize {
        self.phases * self.rounds_per_phase
    }

    /// Phase (1-based) of round `t`.
    pub fn phase_of(&self, t: usize) -> usize {
        ((t - 1) / self.rounds_per_phase + 1).min(self.phases)
    }

    pub fn threshold(&self, phase: usize) -> f64 {
        self.thresholds[phase - 1]
    }

    /// Estimate given to vertices deleted in `phase`: the phase threshold.
    pub fn label(&self, phase: usize) -> f64 {
        self.threshold(phase)
    }

    /// Label of vertices still alive after the last phase.
    pub fn final_label(&self) -> f64 {
        self.threshold(self.phases)
    }

    pub fn labels(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn with_rounds_per_phase(mut self, rounds: usize) -> Result<Self> {
        if rounds == 0 {
            return Err(Error::invalid("rounds per phase must be at least 1"));
        }
        self.rounds_per_phase = rounds;
        Ok(self)
    }
}

/// Smallest `p ≥ 0` with `base^p ≥ n`.
fn ceil_log(base: f64, n: usize) -> usize {
    let (mut p, mut power) = (0, 1.0f64);
    while power < n as f64 {
        power *= base;
        p += 1;
    }
    p
}

pub fn build_schedule(n: usize, eta: f64) -> Result<PhaseSchedule> {
    if n < 2 {
        return Err(Error::invalid(format!("schedule needs n >= 2, got {n}")));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("eta must be positive, got {eta}")));
    }
    let base = 2.0 + eta;
    let phases = ceil_log(base, n) + 1;
    // At threshold (2+η)c, every round deletes at least an η/(2+η) share of
    // the remaining vertices of coreness ≤ c (they span at most c·|W| edges),
    // so R such rounds clear them all.
    let rounds_per_phase = ceil_log(1.0 + eta / 2.0, n + 1);
    let thresholds = (1..=phases as i32).map(|p| base.powi(p)).collect();
    Ok(PhaseSchedule {
        eta,
        phases,
        rounds_per_phase,
        thresholds,
    })
}

/// Schedule used by [`run_approx_core`] for `n` vertices under `cfg`.
pub fn schedule_for(n: usize, cfg: &RunConfig) -> Result<PhaseSchedule> {
    let sched = build_schedule(n.max(2), cfg.eta)?;
    match cfg.phase_rounds {
        Some(r) => sched.with_rounds_per_phase(r),
        None => Ok(sched),
    }
}

#[derive(Clone, Debug)]
pub struct ApproxServer {
    schedule: PhaseSchedule,
    values: Vec<f64>,
    round_assigned: Vec<usize>,
    phase: Vec<usize>,
}

impl ApproxServer {
    pub fn new(n: usize, schedule: PhaseSchedule) -> Self {
        ApproxServer {
            schedule,
            values: vec![f64::NAN; n],
            round_assigned: vec![0; n],
            phase: vec![0; n],
        }
    }
}

impl ServerLogic for ApproxServer {
    type Output = EstimateVector;

    fn step(&mut self, t: usize, msgs: &VertexValues) -> Result<Vec<usize>> {
        let phase = self.schedule.phase_of(t);
        let threshold = self.schedule.threshold(phase);
        let mut deleted = Vec::new();
        for (v, m) in msgs.iter() {
            if m.is_nan() {
                return Err(Error::ProtocolViolation(format!("vertex {v} sent NaN")));
            }
            if m <= threshold {
                self.values[v] = self.schedule.label(phase);
                self.round_assigned[v] = t;
                self.phase[v] = phase;
                deleted.push(v);
            }
        }
        Ok(deleted)
    }

    fn finished(&self, t: usize, alive: usize) -> bool {
        alive == 0 || t >= self.schedule.total_rounds()
    }

    fn output(mut self, tr: &Transcript) -> EstimateVector {
        let last = tr.round_count();
        for v in 0..self.values.len() {
            if tr.deleted_at(v).is_none() {
                self.values[v] = self.schedule.final_label();
                self.round_assigned[v] = last;
                self.phase[v] = self.schedule.phases;
            }
        }
        EstimateVector {
            values: self.values,
            round_assigned: self.round_assigned,
            phase: Some(self.phase),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ApproxRun {
    pub estimates: EstimateVector,
    pub transcript: Transcript,
    pub schedule: PhaseSchedule,
}

impl ApproxRun {
    pub fn rounds(&self) -> usize {
        self.transcript.round_count()
    }

    /// Vertices that were never deleted and got the final label.
    pub fn leftovers(&self) -> usize {
        self.transcript.alive_count()
    }
}

/// Runs the approximate protocol with counters of horizon `Φ·R`.
pub fn run_approx_core(g: &Graph, cfg: &RunConfig) -> Result<ApproxRun> {
    cfg.validate()?;
    let n = g.vertex_count();
    let schedule = schedule_for(n, cfg)?;
    let horizon = schedule.total_rounds();
    let users = users_for(cfg, n, horizon)?;
    let server = ApproxServer::new(n, schedule.clone());
    let (transcript, estimates) = run_protocol(g, horizon, server, users)?;
    Ok(ApproxRun {
        estimates,
        transcript,
        schedule,
    })
}

/// Vertices outside `[k − Cα − C, (2+η)k + Cα + C]`, or whose upper set
/// `U = {u : k̃(u) ≥ k̃(v)}` has an induced vertex of degree below
/// `k̃(v)/(2+η) − Cα − C`.
pub fn approx_violations(
    g: &Graph,
    coreness: &[usize],
    est: &EstimateVector,
    eta: f64,
    alpha: f64,
    c: f64,
) -> Vec<usize> {
    band_violations(g, coreness, est, 2.0 + eta, c * alpha + c)
}
