//! Trial orchestration and averaging.

use nalgebra::DMatrix;

use super::config::{ExperimentConfig, Variant};
use crate::algorithms::{
    run_aggressive, run_plain_sgd, run_server_baseline, run_sfwfl, run_zero_wait, GlobalTrace, LearningSchedule,
    TrialStreams,
};
use crate::alpha_geometry::{estimate_contraction, geometric_grid, ContractionEstimate};
use crate::error::{Error, Result};
use crate::metrics::{
    alpha_error, fit_slope, lemma3_check, lemma3_rhs, speedup, theorem1_bound, theorem2_bound, BoundParams,
    Lemma3Check, RoundRecord, SlopeFit,
};
use crate::rng::{derive_seed, seeded, stream, SeedBundle, PROBE, TASK};
use crate::tasks::{
    estimate_constants, generate_logistic, generate_quadratic, LogisticSpec, Objective, QuadraticSpec, Task,
    TaskConstants, TaskFamily,
};
use crate::vector::ModelVector;

/// Steps of the contraction grid, as multiples of `1 / lambda`.
const CONTRACTION_GRID: (f64, f64, usize) = (1e-3, 1.0, 40);

/// Final state of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialFinal {
    pub err_alpha: f64,
    pub err_l2: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialOutcome {
    Completed(TrialFinal),
    Diverged { round: usize, detail: String },
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    /// Trial-averaged records over the completed trials.
    pub records: Vec<RoundRecord>,
    pub trials: Vec<TrialOutcome>,
    pub divergences: usize,
    /// Fit of `err_alpha` over the last half of the recorded rounds.
    pub slope: Option<SlopeFit>,
    pub constants: TaskConstants,
    pub contraction: ContractionEstimate,
    pub bound_params: BoundParams,
    /// `theta > (alpha - 1) / (M L)` with the estimated `L`.
    pub theta_valid: bool,
    /// Worst deviation-bound ratio over all completed pipelined trials.
    pub lemma3: Option<Lemma3Check>,
    /// Compute-and-wait over zero-wait wall time, for the pipelined variants.
    pub speedup: Option<f64>,
}

impl RunSummary {
    pub fn completed(&self) -> impl Iterator<Item = &TrialFinal> {
        self.trials.iter().filter_map(|t| match t {
            TrialOutcome::Completed(f) => Some(f),
            TrialOutcome::Diverged { .. } => None,
        })
    }

    pub fn final_record(&self) -> Option<&RoundRecord> {
        self.records.last()
    }
}

/// Generates the configured task from the task-seed stream.
pub fn build_task(cfg: &ExperimentConfig) -> Result<Task> {
    let t = &cfg.task;
    let mut rng = stream(cfg.run.task_seed, TASK, 0);
    Ok(match t.family {
        TaskFamily::Quadratic => {
            let mut spec = QuadraticSpec::new(t.d, t.n_ues, t.samples_per_ue, t.heterogeneity, t.conditioning);
            spec.target_noise = t.target_noise;
            Task::Quadratic(generate_quadratic(&spec, &mut rng)?)
        }
        TaskFamily::Logistic => Task::Logistic(generate_logistic(
            &LogisticSpec {
                d: t.d,
                n_ues: t.n_ues,
                samples_per_ue: t.samples_per_ue,
                heterogeneity: t.heterogeneity,
                regularization: t.regularization,
            },
            &mut rng,
        )?),
    })
}

/// Simulated time after `round` computing rounds.
pub fn wall_units(cfg: &ExperimentConfig, round: usize) -> f64 {
    let m = cfg.algorithm.local_steps as f64;
    let per_round = match cfg.algorithm.variant {
        Variant::Sfwfl | Variant::Server => m * (1.0 + cfg.algorithm.latency as f64),
        Variant::ZeroWait | Variant::Aggressive | Variant::Sgd => m,
    };
    per_round * round as f64
}

fn schedule(cfg: &ExperimentConfig) -> Result<LearningSchedule> {
    let a = &cfg.algorithm;
    LearningSchedule::new(a.theta, a.local_steps, a.rounds, a.latency)?.with_record_every(cfg.run.record_every)
}

fn run_trace(cfg: &ExperimentConfig, task: &Task, w0: &ModelVector, trial: usize) -> Result<GlobalTrace> {
    let sched = schedule(cfg)?;
    let channel = cfg.channel.channel()?;
    let seeds = SeedBundle::new(cfg.run.seed, trial as u64);
    let mut streams = TrialStreams::new(&seeds, task.n_ues());
    match cfg.algorithm.variant {
        Variant::Sfwfl => run_sfwfl(task, &sched, &channel, w0, &mut streams),
        Variant::ZeroWait => run_zero_wait(task, &sched, &channel, w0, &mut streams),
        Variant::Aggressive => run_aggressive(task, &sched, &channel, w0, &mut streams),
        Variant::Server => {
            let p = cfg.algorithm.participants_per_round.expect("validated");
            run_server_baseline(task, &sched, p, w0, &mut streams)
        }
        Variant::Sgd => {
            let mut rng = seeds.sampling(1).remove(0);
            run_plain_sgd(task, &sched, w0, &mut rng)
        }
    }
}

struct TrialRows {
    rows: Vec<[f64; 3]>,
    deviations: Option<Vec<f64>>,
    lemma3: Option<Lemma3Check>,
}

fn run_trial(
    cfg: &ExperimentConfig,
    task: &Task,
    w0: &ModelVector,
    g: f64,
    trial: usize,
) -> Result<std::result::Result<TrialRows, (usize, String)>> {
    let trace = match run_trace(cfg, task, w0, trial) {
        Ok(t) => t,
        Err(Error::Diverged { round, detail }) => {
            log::warn!("trial {trial} diverged at round {round}: {detail}");
            return Ok(Err((round, detail)));
        }
        Err(e) => return Err(e),
    };
    let alpha = cfg.channel.alpha;
    let w_star = task.w_star();
    let mut rows = Vec::with_capacity(trace.records.len());
    for rec in &trace.records {
        let diff = rec.w_mean.sub(w_star)?;
        rows.push([alpha_error(&rec.w_mean, w_star, alpha)?, diff.norm2(), task.loss(&rec.w_mean)]);
    }
    let pipelined = matches!(cfg.algorithm.variant, Variant::ZeroWait | Variant::Aggressive);
    let (deviations, lemma3) = if pipelined {
        let devs = trace.records.iter().map(|r| r.max_deviation_sq.unwrap_or(0.0)).collect();
        let theta = cfg.algorithm.theta;
        let check = lemma3_check(&trace, |k| theta / k as f64, cfg.algorithm.local_steps, trace.latency, g).ok();
        (Some(devs), check)
    } else {
        (None, None)
    };
    Ok(Ok(TrialRows { rows, deviations, lemma3 }))
}

#[cfg(feature = "parallel")]
fn map_trials<F, T>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync + Send,
    T: Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_trials<F, T>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Task-level constants and the contraction estimate for `cfg`.
pub fn analyze_task(cfg: &ExperimentConfig, task: &Task, w0: &ModelVector) -> Result<(TaskConstants, ContractionEstimate)> {
    let noise = cfg.channel.channel()?.noise;
    let radius = match cfg.run.probe_radius {
        Some(r) => r,
        None => w0.sub(task.w_star())?.norm2(),
    };
    let mut probe_rng = seeded(derive_seed(cfg.run.task_seed, PROBE, 0));
    let constants = estimate_constants(task, &noise, radius, cfg.run.g_probes, &mut probe_rng)?;
    let h: DMatrix<f64> = task.hessian(task.w_star());
    let q = (&h + h.transpose()) * 0.5;
    let (lo, hi, n) = CONTRACTION_GRID;
    let grid = geometric_grid(lo / constants.lambda_smooth, hi / constants.lambda_smooth, n);
    let contraction = estimate_contraction(&q, cfg.channel.alpha, &grid, cfg.run.l_probes, &mut probe_rng)?;
    Ok((constants, contraction))
}

/// Runs every trial of `cfg` and averages the completed ones.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let task = build_task(cfg)?;
    run_experiment_on(cfg, &task)
}

/// Like [`run_experiment`] with a pre-built task.
pub fn run_experiment_on(cfg: &ExperimentConfig, task: &Task) -> Result<RunSummary> {
    cfg.validate()?;
    let w0 = ModelVector::zeros(task.dim());
    let (constants, contraction) = analyze_task(cfg, task, &w0)?;
    let sched = schedule(cfg)?;
    let theta_valid = sched.theta_is_valid(cfg.channel.alpha, contraction.l);
    if !theta_valid {
        log::warn!(
            "theta = {} does not exceed (alpha - 1) / (M L) = {}",
            cfg.algorithm.theta,
            (cfg.channel.alpha - 1.0) / (cfg.algorithm.local_steps as f64 * contraction.l)
        );
    }
    let results = map_trials(cfg.run.trials, |t| run_trial(cfg, task, &w0, constants.g, t));

    let mut completed = Vec::new();
    let mut trials = Vec::with_capacity(cfg.run.trials);
    for r in results {
        match r? {
            Ok(rows) => {
                let last = *rows.rows.last().expect("at least one record");
                trials.push(TrialOutcome::Completed(TrialFinal { err_alpha: last[0], err_l2: last[1], loss: last[2] }));
                completed.push(rows);
            }
            Err((round, detail)) => trials.push(TrialOutcome::Diverged { round, detail }),
        }
    }
    let divergences = cfg.run.trials - completed.len();
    if completed.is_empty() {
        return Err(Error::AllTrialsDiverged(divergences));
    }

    let fading_sd = cfg.channel.channel()?.fading.variance().sqrt();
    let bound_params = BoundParams {
        theta: cfg.algorithm.theta,
        alpha: cfg.channel.alpha,
        c: constants.c,
        d: task.dim(),
        g: constants.g,
        m: cfg.algorithm.local_steps,
        lambda_smooth: constants.lambda_smooth,
        sigma: fading_sd,
        n: task.n_ues(),
        mu: constants.mu,
        l: contraction.l,
    };
    let latency = cfg.algorithm.latency;
    let variant = cfg.algorithm.variant;
    let n_done = completed.len() as f64;
    let n_records = completed[0].rows.len();
    let mut records = Vec::with_capacity(n_records);
    for i in 0..n_records {
        let round = (i + 1) * cfg.run.record_every;
        let mut acc = [0.0; 3];
        for c in &completed {
            for (a, v) in acc.iter_mut().zip(c.rows[i]) {
                *a += v;
            }
        }
        let iterate = round + 1;
        let (lemma3_lhs, lemma3_rhs_v) = match variant {
            Variant::ZeroWait | Variant::Aggressive if iterate > latency => {
                let lhs = completed.iter().map(|c| c.deviations.as_ref().expect("pipelined")[i]).sum::<f64>() / n_done;
                let rhs = lemma3_rhs(cfg.algorithm.theta / (iterate - latency) as f64, cfg.algorithm.local_steps, latency, constants.g);
                (Some(lhs), Some(rhs))
            }
            _ => (None, None),
        };
        let bound = match variant {
            Variant::Sfwfl => Some(theorem1_bound(iterate, &bound_params)),
            Variant::ZeroWait | Variant::Aggressive => Some(theorem2_bound(iterate, &bound_params, latency)),
            Variant::Server | Variant::Sgd => None,
        }
        .filter(|b| b.is_finite());
        records.push(RoundRecord {
            round,
            wall_units: wall_units(cfg, round),
            err_alpha: acc[0] / n_done,
            err_l2: acc[1] / n_done,
            loss: acc[2] / n_done,
            lemma3_lhs,
            lemma3_rhs: lemma3_rhs_v,
            bound_value: bound,
        });
    }

    let last_round = records.last().map_or(0, |r| r.round);
    let points: Vec<(usize, f64)> = records.iter().map(|r| (r.round, r.err_alpha)).collect();
    let slope = fit_slope(&points, (last_round / 2).max(2), last_round).ok();
    let lemma3 = completed
        .iter()
        .filter_map(|c| c.lemma3)
        .max_by(|a, b| a.max_ratio.total_cmp(&b.max_ratio));
    let speedup = match variant {
        Variant::ZeroWait | Variant::Aggressive => {
            Some(speedup(cfg.algorithm.local_steps as f64, latency as f64, 0.0, 0.0)?)
        }
        _ => None,
    };
    Ok(RunSummary {
        config: cfg.clone(),
        records,
        trials,
        divergences,
        slope,
        constants,
        contraction,
        bound_params,
        theta_valid,
        lemma3,
        speedup,
    })
}
