//! Synchronous-round engines: Decentralized SGD, teleportation (plain and
//! communication-overlap schedules) and client-sampling DSGD.
//!
//! Every engine records metrics at iteration 0, before any update, and after
//! each of the `T` updates, so a completed trace has `T + 1` records.

mod assignment;
mod dsgd;
mod gossip;
mod teleport;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use assignment::{sample_active_set, ActiveAssignment};
pub use dsgd::{client_sampling_mixing, run_client_sampling, run_dsgd};
pub use gossip::gossip_step;
pub use teleport::{run_teleportation, run_teleportation_overlap};

use crate::error::{Error, Result};
use crate::metrics::{column_error, column_mean};
use crate::problem::{NoiseModel, QuadraticProblem};
use crate::streams::StreamPlan;
use crate::topology::Family;

/// Errors above this magnitude count as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Dsgd,
    Teleport,
    TeleportOverlap,
    ClientSampling,
    SearchK,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dsgd => "dsgd",
            Algorithm::Teleport => "teleport",
            Algorithm::TeleportOverlap => "teleport-overlap",
            Algorithm::ClientSampling => "client-sampling",
            Algorithm::SearchK => "search-k",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "dsgd" => Ok(Algorithm::Dsgd),
            "teleport" => Ok(Algorithm::Teleport),
            "teleport-overlap" => Ok(Algorithm::TeleportOverlap),
            "client-sampling" => Ok(Algorithm::ClientSampling),
            "search-k" => Ok(Algorithm::SearchK),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Inputs shared by every engine.
#[derive(Debug, Clone)]
pub struct RunSetup<'a> {
    pub problem: &'a QuadraticProblem,
    pub noise: NoiseModel,
    pub eta: f64,
    /// Number of updates `T`.
    pub iterations: usize,
    pub plan: StreamPlan,
    /// Shared initial parameter of every node.
    pub init: Vec<f64>,
    /// Stop as soon as the recorded error is at or below this value.
    pub stop_at: Option<f64>,
}

impl<'a> RunSetup<'a> {
    pub fn new(
        problem: &'a QuadraticProblem,
        noise: NoiseModel,
        eta: f64,
        iterations: usize,
        plan: StreamPlan,
    ) -> Self {
        RunSetup {
            problem,
            noise,
            eta,
            iterations,
            plan,
            init: vec![0.0; problem.d()],
            stop_at: None,
        }
    }

    pub fn with_init(mut self, init: Vec<f64>) -> Self {
        self.init = init;
        self
    }

    pub fn stop_at(mut self, target: Option<f64>) -> Self {
        self.stop_at = target;
        self
    }

    fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() || self.eta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "step size must be positive, got {}",
                self.eta
            )));
        }
        if self.init.len() != self.problem.d() {
            return Err(Error::InvalidShape(format!(
                "initial parameter has dimension {}, problem has {}",
                self.init.len(),
                self.problem.d()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub error: f64,
    pub consensus_error: f64,
    /// `‖∇f(x̄)‖²` at the average of the participating parameters.
    pub grad_norm_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    ReachedTarget,
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub algorithm: Algorithm,
    pub topology: Family,
    pub n: usize,
    pub k: usize,
    pub eta: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub meta: RunMeta,
    records: Vec<TraceRecord>,
    final_params: DMatrix<f64>,
    status: RunStatus,
    gradient_evaluations: u64,
}

impl RunTrace {
    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    /// Parameters after the last recorded iteration, one column per token
    /// (or per node for the full-topology engines).
    pub fn final_params(&self) -> &DMatrix<f64> {
        &self.final_params
    }

    pub fn status(&self) -> RunStatus {
        self.status
    }

    pub fn diverged(&self) -> bool {
        self.status == RunStatus::Diverged
    }

    pub fn gradient_evaluations(&self) -> u64 {
        self.gradient_evaluations
    }

    pub fn final_error(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.error)
    }

    pub fn mean_grad_norm_sq(&self) -> f64 {
        let sum: f64 = self.records.iter().map(|r| r.grad_norm_sq).sum();
        sum / self.records.len() as f64
    }
}

/// Accumulates records and decides when a run must stop.
struct Recorder<'a> {
    problem: &'a QuadraticProblem,
    stop_at: Option<f64>,
    records: Vec<TraceRecord>,
    status: RunStatus,
    gradient_evaluations: u64,
}

impl<'a> Recorder<'a> {
    fn new(setup: &RunSetup<'a>) -> Self {
        Recorder {
            problem: setup.problem,
            stop_at: setup.stop_at,
            records: Vec::with_capacity(setup.iterations.min(1 << 20) + 1),
            status: RunStatus::Completed,
            gradient_evaluations: 0,
        }
    }

    /// Records metrics for column-major `d × k` data. Returns `false` once the
    /// run should stop.
    fn record(&mut self, iteration: usize, data: &[f64]) -> bool {
        let d = self.problem.d();
        let mean = column_mean(data, d);
        let consensus_error = column_error(data, &mean);
        let error = column_error(data, self.problem.optimum());
        let grad_norm_sq = self.problem.full_gradient_norm_sq(&mean);
        self.records.push(TraceRecord {
            iteration,
            error,
            consensus_error,
            grad_norm_sq,
        });
        if !error.is_finite() || error > DIVERGENCE_THRESHOLD {
            self.status = RunStatus::Diverged;
            return false;
        }
        if self.stop_at.is_some_and(|target| error <= target) {
            self.status = RunStatus::ReachedTarget;
            return false;
        }
        true
    }

    fn finish(self, meta: RunMeta, final_params: DMatrix<f64>) -> RunTrace {
        RunTrace {
            meta,
            records: self.records,
            final_params,
            status: self.status,
            gradient_evaluations: self.gradient_evaluations,
        }
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "number of active nodes must lie in 1..={n}, got {k}"
        )));
    }
    Ok(())
}

/// One SGD step `y = x − η ∇F_i(x)` using node `i`'s noise stream.
#[allow(clippy::too_many_arguments)]
fn local_step<R: rand::Rng>(
    problem: &QuadraticProblem,
    noise: &NoiseModel,
    eta: f64,
    node: usize,
    x: &[f64],
    rng: &mut R,
    grad: &mut [f64],
    y: &mut [f64],
) -> Result<()> {
    problem.stochastic_gradient_into(noise, node, x, rng, grad)?;
    for ((yv, xv), g) in y.iter_mut().zip(x).zip(grad.iter()) {
        *yv = xv - eta * g;
    }
    Ok(())
}

fn node_noise_streams(plan: &StreamPlan, n: usize) -> Vec<rand_chacha::ChaCha8Rng> {
    (1..=n).map(|i| plan.node_noise(i)).collect()
}
