//! Training loops.
//!
//! Every runner consumes a [`TrialStreams`] bundle: one sampling stream per UE
//! plus separate fading, interference and participation streams, so paired
//! runs can vary exactly one source of randomness. Records hold the state
//! after each recorded round, i.e. `w_{k+1}` for round `k`.

mod baselines;
mod sfwfl;

pub use baselines::{run_gradient_descent, run_plain_sgd, run_server_baseline, sample_participants, GdOutcome};
pub use sfwfl::{run_aggressive, run_sfwfl, run_zero_wait};

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{SeedBundle, StreamRng};
use crate::tasks::Objective;
use crate::vector::ModelVector;

/// Any coordinate beyond this magnitude aborts a trial.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningSchedule {
    /// `eta_k = theta / k`.
    pub theta: f64,
    /// SGD steps per local round (`M`).
    pub local_steps: usize,
    /// Global rounds (`K`).
    pub rounds: usize,
    /// Communication latency in local rounds (`D`); arrival latency in aggressive mode.
    pub latency: usize,
    /// Keep every `record_every`-th round in the trace.
    pub record_every: usize,
}

impl LearningSchedule {
    pub fn new(theta: f64, local_steps: usize, rounds: usize, latency: usize) -> Result<Self> {
        let s = LearningSchedule { theta, local_steps, rounds, latency, record_every: 1 };
        s.validate()?;
        Ok(s)
    }

    pub fn with_record_every(mut self, record_every: usize) -> Result<Self> {
        self.record_every = record_every;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::invalid("theta", format!("{} must be finite and > 0", self.theta)));
        }
        if self.local_steps == 0 {
            return Err(Error::invalid("local_steps", "must be >= 1"));
        }
        if self.rounds == 0 {
            return Err(Error::invalid("rounds", "must be >= 1"));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every", "must be >= 1"));
        }
        Ok(())
    }

    /// `eta_k` for `k >= 1`.
    #[inline]
    pub fn eta(&self, k: usize) -> f64 {
        self.theta / k as f64
    }

    /// Whether `theta > (alpha - 1) / (M L)`.
    pub fn theta_is_valid(&self, alpha: f64, l: f64) -> bool {
        l > 0.0 && self.theta > (alpha - 1.0) / (self.local_steps as f64 * l)
    }

    fn records(&self, k: usize) -> bool {
        k.is_multiple_of(self.record_every)
    }
}

/// One UE's local state.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerState {
    /// Current local parameter.
    pub w: ModelVector,
    /// Uploaded `(round, accumulated gradient)` pairs awaiting correction.
    pub pending: VecDeque<(usize, ModelVector)>,
    /// Sum of every update applied so far, so `w = w0 - displacement`.
    pub displacement: ModelVector,
}

impl WorkerState {
    pub fn new(w0: &ModelVector) -> Self {
        WorkerState { w: w0.clone(), pending: VecDeque::new(), displacement: ModelVector::zeros(w0.dim()) }
    }

    #[inline]
    fn apply(&mut self, step: f64, direction: &[f64]) {
        self.w.axpy(-step, direction);
        self.displacement.axpy(step, direction);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub round: usize,
    /// Mean of the worker parameters.
    pub w_mean: ModelVector,
    /// `max_n ||w_n - w_mean||^2`, kept by the pipelined runners.
    pub max_deviation_sq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalTrace {
    pub records: Vec<TraceRecord>,
    /// Final worker states.
    pub workers: Vec<WorkerState>,
    /// Computing rounds executed.
    pub rounds: usize,
    /// Latency used for correction bookkeeping (0 for non-pipelined runs).
    pub latency: usize,
    pub corrections_applied: usize,
    /// Largest pending-buffer length seen on any worker.
    pub max_pending: usize,
}

impl GlobalTrace {
    pub fn final_mean(&self) -> Option<&ModelVector> {
        self.records.last().map(|r| &r.w_mean)
    }
}

/// All random streams consumed by one trial.
#[derive(Debug, Clone)]
pub struct TrialStreams {
    pub sampling: Vec<StreamRng>,
    pub fading: StreamRng,
    pub noise: StreamRng,
    pub participation: StreamRng,
}

impl TrialStreams {
    pub fn new(seeds: &SeedBundle, n_ues: usize) -> Self {
        TrialStreams {
            sampling: seeds.sampling(n_ues),
            fading: seeds.fading(),
            noise: seeds.noise(),
            participation: seeds.participation(),
        }
    }

    fn check(&self, n_ues: usize) -> Result<()> {
        if self.sampling.len() != n_ues {
            return Err(Error::DimensionMismatch { expected: n_ues, found: self.sampling.len() });
        }
        Ok(())
    }
}

/// Runs `steps` SGD steps on UE `ue` starting from `w` and returns the sum of
/// the stochastic gradients used. `w` ends at `w - eta * (returned sum)` up to
/// rounding.
pub fn local_round<T: Objective + ?Sized, R: Rng + ?Sized>(
    task: &T,
    w: &mut ModelVector,
    ue: usize,
    eta: f64,
    steps: usize,
    rng: &mut R,
) -> ModelVector {
    let d = task.dim();
    let m = task.samples(ue);
    let mut acc = ModelVector::zeros(d);
    let mut g = vec![0.0; d];
    for _ in 0..steps {
        let s = rng.random_range(0..m);
        g.fill(0.0);
        task.add_sample_gradient(w, ue, s, &mut g);
        acc.axpy(1.0, &g);
        w.axpy(-eta, &g);
    }
    acc
}

fn guard(round: usize, w: &[f64]) -> Result<()> {
    for (i, &x) in w.iter().enumerate() {
        if !x.is_finite() || x.abs() > DIVERGENCE_LIMIT {
            return Err(Error::Diverged { round, detail: format!("coordinate {i} reached {x}") });
        }
    }
    Ok(())
}

fn check_start<T: Objective + ?Sized>(task: &T, w0: &ModelVector) -> Result<()> {
    crate::error::check_dim(task.dim(), w0.dim())?;
    if !w0.is_finite() {
        return Err(Error::invalid("w0", "must be finite"));
    }
    Ok(())
}
