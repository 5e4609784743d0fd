use rand::seq::index;
use rand::Rng;

use super::{check_start, guard, local_round, GlobalTrace, LearningSchedule, TraceRecord, TrialStreams, WorkerState};
use crate::error::{Error, Result};
use crate::tasks::Objective;
use crate::vector::ModelVector;

/// Uniform subset of `0..n` of size `p`, in ascending order. Consumes no
/// randomness when `p == n`.
pub fn sample_participants<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Vec<usize> {
    if p >= n {
        return (0..n).collect();
    }
    let mut chosen = index::sample(rng, n, p).into_vec();
    chosen.sort_unstable();
    chosen
}

/// Digital server baseline: a uniform subset of UEs runs local rounds from the
/// current global model and the server applies the exact mean of their
/// accumulated gradients.
pub fn run_server_baseline<T: Objective + ?Sized>(
    task: &T,
    schedule: &LearningSchedule,
    participants: usize,
    w0: &ModelVector,
    streams: &mut TrialStreams,
) -> Result<GlobalTrace> {
    check_start(task, w0)?;
    let n = task.n_ues();
    streams.check(n)?;
    if participants == 0 || participants > n {
        return Err(Error::invalid("participants_per_round", format!("{participants} outside [1, {n}]")));
    }
    let d = task.dim();
    let mut global = WorkerState::new(w0);
    let mut records = Vec::with_capacity(schedule.rounds / schedule.record_every);
    for k in 1..=schedule.rounds {
        let eta = schedule.eta(k);
        let chosen = sample_participants(n, participants, &mut streams.participation);
        let mut sum = ModelVector::zeros(d);
        for &ue in &chosen {
            let mut w = global.w.clone();
            sum.axpy(1.0, &local_round(task, &mut w, ue, eta, schedule.local_steps, &mut streams.sampling[ue]));
        }
        for x in sum.iter_mut() {
            *x /= participants as f64;
        }
        global.apply(eta, &sum);
        guard(k, &global.w)?;
        if schedule.records(k) {
            records.push(TraceRecord { round: k, w_mean: global.w.clone(), max_deviation_sq: None });
        }
    }
    Ok(GlobalTrace {
        records,
        workers: vec![global],
        rounds: schedule.rounds,
        latency: 0,
        corrections_applied: 0,
        max_pending: 0,
    })
}

/// Centralized SGD over the pooled data: `local_steps` steps of size `eta_k`
/// per round, each on a sample drawn uniformly from all UEs' samples.
pub fn run_plain_sgd<T: Objective + ?Sized, R: Rng + ?Sized>(
    task: &T,
    schedule: &LearningSchedule,
    w0: &ModelVector,
    rng: &mut R,
) -> Result<GlobalTrace> {
    check_start(task, w0)?;
    let d = task.dim();
    let offsets: Vec<usize> = (0..task.n_ues())
        .scan(0, |acc, ue| {
            *acc += task.samples(ue);
            Some(*acc)
        })
        .collect();
    let total = *offsets.last().expect("at least one UE");
    let mut state = WorkerState::new(w0);
    let mut g = vec![0.0; d];
    let mut records = Vec::with_capacity(schedule.rounds / schedule.record_every);
    for k in 1..=schedule.rounds {
        let eta = schedule.eta(k);
        for _ in 0..schedule.local_steps {
            let idx = rng.random_range(0..total);
            let ue = offsets.partition_point(|&end| end <= idx);
            let start = if ue == 0 { 0 } else { offsets[ue - 1] };
            g.fill(0.0);
            task.add_sample_gradient(&state.w, ue, idx - start, &mut g);
            state.apply(eta, &g);
        }
        guard(k, &state.w)?;
        if schedule.records(k) {
            records.push(TraceRecord { round: k, w_mean: state.w.clone(), max_deviation_sq: None });
        }
    }
    Ok(GlobalTrace {
        records,
        workers: vec![state],
        rounds: schedule.rounds,
        latency: 0,
        corrections_applied: 0,
        max_pending: 0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdOutcome {
    pub w: ModelVector,
    pub steps: usize,
    pub converged: bool,
}

/// Full-gradient descent with a constant step, stopping once the global
/// gradient norm is at most `tolerance`.
pub fn run_gradient_descent<T: Objective + ?Sized>(
    task: &T,
    eta: f64,
    max_steps: usize,
    tolerance: f64,
    w0: &ModelVector,
) -> Result<GdOutcome> {
    check_start(task, w0)?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid("eta", format!("{eta} must be finite and > 0")));
    }
    let mut w = w0.clone();
    for step in 0..max_steps {
        let g = task.global_gradient(&w)?;
        if g.norm2() <= tolerance {
            return Ok(GdOutcome { w, steps: step, converged: true });
        }
        w.axpy(-eta, &g);
        guard(step + 1, &w)?;
    }
    let converged = task.global_gradient(&w)?.norm2() <= tolerance;
    Ok(GdOutcome { w, steps: max_steps, converged })
}
