use std::collections::VecDeque;

use super::{check_start, guard, local_round, GlobalTrace, LearningSchedule, TraceRecord, TrialStreams, WorkerState};
use crate::channel::{draw_channel, ota_aggregate, ChannelConfig};
use crate::error::{Error, Result};
use crate::tasks::Objective;
use crate::vector::ModelVector;

fn transmit(
    grads: &[ModelVector],
    channel: &ChannelConfig,
    d: usize,
    streams: &mut TrialStreams,
) -> Result<ModelVector> {
    let draw = draw_channel(
        &channel.fading,
        &channel.noise,
        grads.len(),
        d,
        &mut streams.fading,
        &mut streams.noise,
    )?;
    ota_aggregate(grads, &draw)
}

/// Compute-and-wait training: every round each UE runs a local round from the
/// shared start point, the AP superposes the accumulated gradients and every
/// UE restarts from `start - eta_k * aggregate`.
///
/// All UEs hold the same start point by construction, with or without noise.
pub fn run_sfwfl<T: Objective + ?Sized>(
    task: &T,
    schedule: &LearningSchedule,
    channel: &ChannelConfig,
    w0: &ModelVector,
    streams: &mut TrialStreams,
) -> Result<GlobalTrace> {
    check_start(task, w0)?;
    let n = task.n_ues();
    streams.check(n)?;
    let d = task.dim();
    let mut shared = WorkerState::new(w0);
    let mut records = Vec::with_capacity(schedule.rounds / schedule.record_every);
    for k in 1..=schedule.rounds {
        let eta = schedule.eta(k);
        let grads: Vec<ModelVector> = (0..n)
            .map(|ue| {
                let mut w = shared.w.clone();
                local_round(task, &mut w, ue, eta, schedule.local_steps, &mut streams.sampling[ue])
            })
            .collect();
        let aggregate = transmit(&grads, channel, d, streams)?;
        shared.apply(eta, &aggregate);
        guard(k, &shared.w)?;
        if schedule.records(k) {
            records.push(TraceRecord { round: k, w_mean: shared.w.clone(), max_deviation_sq: None });
        }
    }
    Ok(GlobalTrace {
        records,
        workers: vec![shared; n],
        rounds: schedule.rounds,
        latency: 0,
        corrections_applied: 0,
        max_pending: 0,
    })
}

/// Step-weighted sum of the local gradients computed since the last upload,
/// expressed at the step size of upload round `k`; drains `rounds`.
fn block_gradient(schedule: &LearningSchedule, k: usize, rounds: &mut Vec<(usize, ModelVector)>) -> ModelVector {
    let (_, mut block) = rounds.pop().expect("current round is buffered");
    let eta = schedule.eta(k);
    for (j, g) in rounds.drain(..) {
        block.axpy(schedule.eta(j) / eta, &g);
    }
    block
}

/// Pipelined training: `schedule.rounds * (1 + D)` computing rounds, uploads
/// on the rounds selected by `uploads`, and each aggregate applied as a
/// correction `D` rounds after its upload. An upload carries every local
/// round since the previous one, so each round is corrected exactly once.
fn run_pipelined<T: Objective + ?Sized>(
    task: &T,
    schedule: &LearningSchedule,
    channel: &ChannelConfig,
    w0: &ModelVector,
    streams: &mut TrialStreams,
    uploads: impl Fn(usize) -> bool,
) -> Result<GlobalTrace> {
    check_start(task, w0)?;
    let n = task.n_ues();
    streams.check(n)?;
    let d = task.dim();
    let latency = schedule.latency;
    let total = schedule.rounds * (1 + latency);
    let mut workers = vec![WorkerState::new(w0); n];
    let mut unsent: Vec<Vec<(usize, ModelVector)>> = vec![Vec::new(); n];
    let mut in_flight: VecDeque<(usize, ModelVector)> = VecDeque::new();
    let mut records = Vec::with_capacity(total / schedule.record_every);
    let mut corrections = 0;
    let mut max_pending = 0;
    for k in 1..=total {
        let eta = schedule.eta(k);
        for (ue, worker) in workers.iter_mut().enumerate() {
            let start = worker.w.clone();
            let g = local_round(task, &mut worker.w, ue, eta, schedule.local_steps, &mut streams.sampling[ue]);
            worker.w = start;
            worker.apply(eta, &g);
            unsent[ue].push((k, g));
        }
        if uploads(k) {
            let grads: Vec<ModelVector> = unsent.iter_mut().map(|rounds| block_gradient(schedule, k, rounds)).collect();
            let aggregate = transmit(&grads, channel, d, streams)?;
            for (worker, g) in workers.iter_mut().zip(grads) {
                worker.pending.push_back((k, g));
                max_pending = max_pending.max(worker.pending.len());
            }
            in_flight.push_back((k, aggregate));
        }
        while let Some((j, _)) = in_flight.front() {
            if j + latency > k + 1 {
                break;
            }
            let (j, aggregate) = in_flight.pop_front().expect("front exists");
            let eta_j = schedule.eta(j);
            for worker in &mut workers {
                let (round, local) = worker.pending.pop_front().expect("every upload is buffered");
                debug_assert_eq!(round, j);
                let correction: Vec<f64> = aggregate.iter().zip(local.iter()).map(|(a, b)| a - b).collect();
                worker.apply(eta_j, &correction);
            }
            corrections += 1;
        }
        for worker in &workers {
            guard(k, &worker.w)?;
        }
        if schedule.records(k) {
            let mean = ModelVector::mean_of(workers.iter().map(|w| &w.w), d);
            let dev = workers
                .iter()
                .map(|w| w.w.iter().zip(mean.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(0.0, f64::max);
            records.push(TraceRecord { round: k, w_mean: mean, max_deviation_sq: Some(dev) });
        }
    }
    Ok(GlobalTrace { records, workers, rounds: total, latency, corrections_applied: corrections, max_pending })
}

/// Zero-wait training with latency `D = schedule.latency >= 1`.
///
/// UEs never pause: every computing round applies its own local steps, uploads
/// happen on rounds with `(k - 1) mod D = 0`, and the aggregate of upload
/// round `j` replaces the local gradients it carries at the start of round
/// `j + D`.
pub fn run_zero_wait<T: Objective + ?Sized>(
    task: &T,
    schedule: &LearningSchedule,
    channel: &ChannelConfig,
    w0: &ModelVector,
    streams: &mut TrialStreams,
) -> Result<GlobalTrace> {
    let d = schedule.latency;
    if d == 0 {
        return Err(Error::invalid("latency", "zero-wait needs D >= 1"));
    }
    run_pipelined(task, schedule, channel, w0, streams, |k| (k - 1) % d == 0)
}

/// Aggressive uploading: every computing round is uploaded and its aggregate
/// is applied `schedule.latency` rounds later.
pub fn run_aggressive<T: Objective + ?Sized>(
    task: &T,
    schedule: &LearningSchedule,
    channel: &ChannelConfig,
    w0: &ModelVector,
    streams: &mut TrialStreams,
) -> Result<GlobalTrace> {
    if schedule.latency == 0 {
        return Err(Error::invalid("arrival_latency", "must be >= 1"));
    }
    run_pipelined(task, schedule, channel, w0, streams, |_| true)
}
