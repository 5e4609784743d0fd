//! Acceptance battery: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use sfwfl::algorithms::{run_plain_sgd, run_sfwfl, LearningSchedule, TrialStreams};
use sfwfl::alpha_geometry::lemma1_gap;
use sfwfl::channel::{ChannelConfig, FadingKind, FadingModel};
use sfwfl::harness::{
    build_task, format_csv, run_experiment, run_experiment_on, run_selftest, ExperimentConfig, RunSummary,
    TrialOutcome, Variant,
};
use sfwfl::metrics::{fit_speedup_tau, speedup};
use sfwfl::rng::{seeded, SeedBundle};
use sfwfl::stable_noise::{estimate_tail_index, sample_stable, StableNoiseParams, DEFAULT_HILL_FRACTION};
use sfwfl::tasks::{generate_quadratic, QuadraticSpec};
use sfwfl::ModelVector;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

/// Quadratic task with d = 10, N = 50, M = 5 and heterogeneity 0.5.
fn rate_config(alpha: f64, rounds: usize, trials: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.task.d = 10;
    cfg.task.n_ues = 50;
    cfg.task.samples_per_ue = 20;
    cfg.task.heterogeneity = 0.5;
    cfg.algorithm.variant = Variant::Sfwfl;
    cfg.algorithm.local_steps = 5;
    cfg.algorithm.latency = 0;
    cfg.algorithm.rounds = rounds;
    cfg.channel.alpha = alpha;
    cfg.run.trials = trials;
    cfg.run.record_every = 10;
    cfg
}

fn final_err_alpha(s: &RunSummary) -> f64 {
    s.final_record().expect("records").err_alpha
}

fn final_err_l2(s: &RunSummary) -> f64 {
    s.final_record().expect("records").err_l2
}

fn slope(s: &RunSummary) -> f64 {
    s.slope.map_or(f64::NAN, |f| f.exponent)
}

fn lemma1() -> Outcome {
    let mut rng = seeded(101);
    let n = 100_000;
    let mut worst = f64::INFINITY;
    let mut bad = 0;
    for _ in 0..n {
        let d = rng.random_range(1..=16);
        let alpha = rng.random_range(1.0..=2.0_f64).max(1.0 + 1e-9);
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let w: Vec<f64> = (0..d).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..d).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let gap = lemma1_gap(&w, &v, alpha).expect("valid inputs");
        worst = worst.min(gap);
        if gap < -1e-9 {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{n} triples, {bad} below -1e-9, min gap {worst:e}"))
}

fn sampler() -> Outcome {
    let mut rng = seeded(202);
    let p = StableNoiseParams::new(2.0, 1.0).unwrap();
    let n = 1_000_000;
    let var = (0..n).map(|_| sample_stable(&p, &mut rng).powi(2)).sum::<f64>() / n as f64;
    let var_ok = (var / 2.0 - 1.0).abs() <= 0.02;
    let mut details = vec![format!("alpha=2 variance {var:.4} (expect 2)")];
    let mut hill_ok = true;
    for alpha in [1.2, 1.5, 1.8] {
        let p = StableNoiseParams::new(alpha, 1.0).unwrap();
        let xs: Vec<f64> = (0..n).map(|_| sample_stable(&p, &mut rng)).collect();
        let est = estimate_tail_index(&xs, DEFAULT_HILL_FRACTION).unwrap();
        hill_ok &= (est - alpha).abs() <= 0.1;
        details.push(format!("hill({alpha}) = {est:.3}"));
    }
    outcome(var_ok && hill_ok, details.join(", "))
}

fn noiseless_reduction() -> Outcome {
    let task = generate_quadratic(&QuadraticSpec::new(6, 1, 30, 0.0, 4.0), &mut seeded(303)).unwrap();
    let sched = LearningSchedule::new(0.15, 1, 1000, 0).unwrap();
    let w0 = ModelVector::zeros(6);
    let bundle = SeedBundle::new(304, 0);
    let a = run_sfwfl(&task, &sched, &ChannelConfig::ideal(), &w0, &mut TrialStreams::new(&bundle, 1)).unwrap();
    let b = run_plain_sgd(&task, &sched, &w0, &mut bundle.sampling(1)[0]).unwrap();
    let worst = a
        .records
        .iter()
        .zip(&b.records)
        .flat_map(|(x, y)| x.w_mean.iter().zip(y.w_mean.iter()).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max);
    let same_len = a.records.len() == 1000 && b.records.len() == 1000;
    outcome(same_len && worst <= 1e-12, format!("max coordinate gap {worst:e} over 1000 rounds"))
}

fn rate_exponent(run: &RunSummary) -> Outcome {
    let e = slope(run);
    let trials = run.trials.len() - run.divergences;
    outcome(
        (-1.35..=-0.65).contains(&e) && trials >= 20,
        format!("exponent {e:.3} over {trials} trials, theta valid: {}", run.theta_valid),
    )
}

fn tail_ordering(runs: &[(f64, RunSummary)]) -> Outcome {
    let slopes: Vec<f64> = runs.iter().map(|(_, s)| slope(s)).collect();
    let finals: Vec<f64> = runs.iter().map(|(_, s)| final_err_alpha(s)).collect();
    let slopes_ok = slopes.windows(2).all(|w| w[0] > w[1]);
    let finals_ok = finals.windows(2).all(|w| w[0] > w[1]);
    let detail = runs
        .iter()
        .zip(slopes.iter().zip(&finals))
        .map(|((a, _), (s, f))| format!("alpha {a}: slope {s:.3}, final {f:.3e}"))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(slopes_ok && finals_ok, detail)
}

fn n_scaling() -> Outcome {
    let mut errs = Vec::new();
    for n in [10, 50, 100] {
        let mut cfg = rate_config(2.0, 2000, 20);
        cfg.task.n_ues = n;
        cfg.channel.fading = FadingKind::Rayleigh;
        cfg.channel.fading_variance = FadingModel::RayleighUnitMean.variance();
        errs.push(final_err_l2(&run_experiment(&cfg).unwrap()));
    }
    let ok = errs.windows(2).all(|w| w[1] <= w[0]) && errs[2] <= 0.8 * errs[0];
    outcome(ok, format!("final err_l2 for N = 10, 50, 100: {:.4e}, {:.4e}, {:.4e}", errs[0], errs[1], errs[2]))
}

fn fading_sensitivity() -> Outcome {
    let base = rate_config(2.0, 2000, 20);
    let task = build_task(&base).unwrap();
    let mut errs = Vec::new();
    for v in [0.0, 0.25, 1.0] {
        let mut cfg = base.clone();
        cfg.channel.fading = FadingKind::Gamma;
        cfg.channel.fading_variance = v;
        errs.push(final_err_alpha(&run_experiment_on(&cfg, &task).unwrap()));
    }
    let mut heavy = base.clone();
    heavy.channel.alpha = 1.5;
    let alpha_ratio = final_err_alpha(&run_experiment_on(&heavy, &task).unwrap()) / final_err_alpha(&run_experiment_on(&base, &task).unwrap());
    let fading_ratio = errs[2] / errs[0];
    let ok = errs.windows(2).all(|w| w[1] >= w[0]) && fading_ratio <= alpha_ratio;
    outcome(
        ok,
        format!(
            "final err_alpha for variance 0, 0.25, 1: {:.4e}, {:.4e}, {:.4e}; fading ratio {fading_ratio:.3} vs alpha 2.0 -> 1.5 ratio {alpha_ratio:.3}",
            errs[0], errs[1], errs[2]
        ),
    )
}

fn zero_wait_runs() -> Vec<(usize, RunSummary)> {
    [1, 2, 4]
        .into_iter()
        .map(|d| {
            let mut cfg = rate_config(2.0, 2000, 10);
            cfg.algorithm.variant = Variant::ZeroWait;
            cfg.algorithm.latency = d;
            cfg.run.record_every = 1;
            (d, run_experiment(&cfg).unwrap())
        })
        .collect()
}

fn lemma3(runs: &[(usize, RunSummary)]) -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for (d, s) in runs {
        let l3 = s.lemma3.expect("zero-wait runs check the deviation bound");
        ok &= l3.max_ratio <= 1.0;
        details.push(format!("D={d}: max ratio {:.3e} over {} rounds", l3.max_ratio, l3.rounds_checked));
    }
    outcome(ok, details.join("; "))
}

fn envelope_violations(s: &RunSummary) -> (usize, usize, f64) {
    let mut checked = 0;
    let mut bad = 0;
    let mut worst: f64 = 0.0;
    for r in s.records.iter().filter(|r| r.round >= 10) {
        if let Some(b) = r.bound_value {
            checked += 1;
            worst = worst.max(r.err_alpha / b);
            if r.err_alpha > b {
                bad += 1;
            }
        }
    }
    (checked, bad, worst)
}

fn bound_envelope(rate: &RunSummary, zero_wait: &[(usize, RunSummary)]) -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for (label, s) in std::iter::once(("sfwfl".to_string(), rate))
        .chain(zero_wait.iter().map(|(d, s)| (format!("zero-wait D={d}"), s)))
    {
        let (checked, bad, worst) = envelope_violations(s);
        ok &= checked > 0 && bad == 0;
        details.push(format!("{label}: {bad}/{checked} violations, max err/bound {worst:.2e}"));
    }
    outcome(ok, details.join("; "))
}

fn speedup_accounting() -> Outcome {
    let targets = [(1.0, 1.9), (2.0, 2.9), (4.0, 4.7)];
    let (tau, worst) = fit_speedup_tau(5.0, &targets, 0.0, 1.0, 1001).unwrap();
    let zero_tau_worst = targets
        .iter()
        .map(|&(d, t)| (speedup(5.0, d, 0.0, 0.0).unwrap() / t - 1.0).abs())
        .fold(0.0, f64::max);
    outcome(
        (0.0..=1.0).contains(&tau) && worst <= 0.05 && zero_tau_worst <= 0.10,
        format!("fitted tau {tau:.3} (worst rel {worst:.4}), tau = 0 worst rel {zero_tau_worst:.4}"),
    )
}

fn final_losses(s: &RunSummary) -> Vec<Option<f64>> {
    s.trials
        .iter()
        .map(|t| match t {
            TrialOutcome::Completed(f) => Some(f.loss),
            TrialOutcome::Diverged { .. } => None,
        })
        .collect()
}

fn server_parity() -> Outcome {
    let base = rate_config(2.0, 2000, 20);
    let task = build_task(&base).unwrap();
    let sf = run_experiment_on(&base, &task).unwrap();
    let mut full = base.clone();
    full.algorithm.variant = Variant::Server;
    full.algorithm.participants_per_round = Some(base.task.n_ues);
    let full = run_experiment_on(&full, &task).unwrap();
    let mut partial = base.clone();
    partial.algorithm.variant = Variant::Server;
    partial.algorithm.participants_per_round = Some(base.task.n_ues / 10);
    let partial = run_experiment_on(&partial, &task).unwrap();

    let (a, b) = (sf.final_record().unwrap().loss, full.final_record().unwrap().loss);
    let rel = (a - b).abs() / b.abs();
    let wins = final_losses(&sf)
        .iter()
        .zip(final_losses(&partial))
        .filter(|(s, p)| matches!((s, p), (Some(s), Some(p)) if p >= s))
        .count();
    outcome(
        rel <= 0.10 && wins >= 16,
        format!("sfwfl loss {a:.6}, full server {b:.6} (rel {rel:.2e}); partial >= sfwfl in {wins}/20 seeds"),
    )
}

fn determinism() -> Outcome {
    let st1 = run_selftest().unwrap().to_csv();
    let st2 = run_selftest().unwrap().to_csv();
    let cfg = rate_config(1.6, 300, 4);
    let e1 = format_csv(&run_experiment(&cfg).unwrap());
    let e2 = format_csv(&run_experiment(&cfg).unwrap());
    outcome(st1 == st2 && e1 == e2, format!("selftest {} bytes, experiment {} bytes", st1.len(), e1.len()))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: usize, name: &str, started: Instant, o: Outcome| {
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("{status} criterion {id:>2} {name}: {} [{:.1}s]", o.detail, started.elapsed().as_secs_f64());
        if !o.passed {
            failures += 1;
        }
    };

    let t = Instant::now();
    report(1, "inner-product gap battery", t, lemma1());
    let t = Instant::now();
    report(2, "stable sampler", t, sampler());
    let t = Instant::now();
    report(3, "noiseless reduction", t, noiseless_reduction());

    let t = Instant::now();
    let tails: Vec<(f64, RunSummary)> =
        [1.3, 1.6, 2.0].into_iter().map(|a| (a, run_experiment(&rate_config(a, 20_000, 100)).unwrap())).collect();
    let rate = &tails[2].1;
    report(4, "rate exponent", t, rate_exponent(rate));
    report(5, "tail ordering", t, tail_ordering(&tails));

    let t = Instant::now();
    report(6, "N scaling", t, n_scaling());
    let t = Instant::now();
    report(7, "fading sensitivity", t, fading_sensitivity());
    let t = Instant::now();
    let zw = zero_wait_runs();
    report(8, "worker deviation bound", t, lemma3(&zw));
    report(9, "bound envelope", t, bound_envelope(rate, &zw));
    let t = Instant::now();
    report(10, "speedup accounting", t, speedup_accounting());
    let t = Instant::now();
    report(11, "server baseline parity", t, server_parity());
    let t = Instant::now();
    report(12, "determinism", t, determinism());

    println!("{} of 12 criteria passed", 12 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
