//! Browser bindings for the simulator: an alpha-stable histogram, a training
//! curve and the zero-wait speedup curve, each returned as a flat `f64` array.

use sfwfl::channel::FadingKind;
use sfwfl::harness::{run_experiment, ExperimentConfig, Variant};
use sfwfl::metrics::speedup;
use sfwfl::rng::seeded;
use sfwfl::stable_noise::{sample_stable, StableNoiseParams};
use wasm_bindgen::prelude::*;

/// Largest accepted draw count for the histogram.
pub const MAX_DRAWS: usize = 1_000_000;
/// Largest accepted `rounds * n_ues * trials` for one curve.
pub const MAX_WORK: usize = 4_000_000;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Histogram of `draws` stable samples over `[-range, range]` with `bins` equal
/// bins, normalized to a density. Samples outside the range are dropped.
pub fn stable_histogram_native(alpha: f64, scale: f64, draws: usize, bins: usize, range: f64, seed: u64) -> Result<Vec<f64>, String> {
    if draws == 0 || draws > MAX_DRAWS {
        return Err(format!("draws must be in 1..={MAX_DRAWS}"));
    }
    if bins == 0 || !(range > 0.0) {
        return Err("need at least one bin and a positive range".into());
    }
    let params = StableNoiseParams::new(alpha, scale).map_err(|e| e.to_string())?;
    let mut rng = seeded(seed);
    let width = 2.0 * range / bins as f64;
    let mut counts = vec![0.0; bins];
    for _ in 0..draws {
        let x = sample_stable(&params, &mut rng);
        if x >= -range && x < range {
            counts[((x + range) / width) as usize] += 1.0;
        }
    }
    let norm = draws as f64 * width;
    Ok(counts.into_iter().map(|c| c / norm).collect())
}

/// Trial-averaged `err_alpha` per round for one configuration.
///
/// `variant` is one of `sfwfl`, `zero_wait`, `aggressive`, `server` or `sgd`;
/// `latency` is used by the pipelined variants.
#[allow(clippy::too_many_arguments)]
pub fn convergence_curve_native(
    variant: &str,
    alpha: f64,
    noise_scale: f64,
    fading_variance: f64,
    n_ues: usize,
    rounds: usize,
    latency: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    if rounds.saturating_mul(n_ues).saturating_mul(trials) > MAX_WORK {
        return Err(format!("rounds * n_ues * trials must stay below {MAX_WORK}"));
    }
    let mut cfg = ExperimentConfig::default();
    cfg.algorithm.variant = variant.parse::<Variant>()?;
    cfg.algorithm.rounds = rounds;
    cfg.algorithm.latency = match cfg.algorithm.variant {
        Variant::ZeroWait | Variant::Aggressive => latency,
        _ => 0,
    };
    if cfg.algorithm.variant == Variant::Server {
        cfg.algorithm.participants_per_round = Some(n_ues.div_ceil(10));
    }
    cfg.task.n_ues = n_ues;
    cfg.channel.alpha = alpha;
    cfg.channel.noise_scale = noise_scale;
    cfg.channel.fading = FadingKind::Gamma;
    cfg.channel.fading_variance = fading_variance;
    cfg.run.trials = trials;
    cfg.run.seed = seed;
    cfg.run.task_seed = seed;
    cfg.run.g_probes = 50;
    cfg.run.l_probes = 200;
    let summary = run_experiment(&cfg).map_err(|e| e.to_string())?;
    Ok(summary.records.iter().map(|r| r.err_alpha).collect())
}

/// Speedup of zero-wait over compute-and-wait for `D = 1..=d_max`.
pub fn speedup_curve_native(m: f64, tau: f64, d_max: usize) -> Result<Vec<f64>, String> {
    (1..=d_max)
        .map(|d| speedup(m, d as f64, tau, tau).map_err(|e| e.to_string()))
        .collect()
}

#[wasm_bindgen]
pub fn stable_histogram(alpha: f64, scale: f64, draws: usize, bins: usize, range: f64, seed: u32) -> Result<Vec<f64>, JsError> {
    stable_histogram_native(alpha, scale, draws, bins, range, seed.into()).map_err(js_err)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn convergence_curve(
    variant: &str,
    alpha: f64,
    noise_scale: f64,
    fading_variance: f64,
    n_ues: usize,
    rounds: usize,
    latency: usize,
    trials: usize,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    convergence_curve_native(variant, alpha, noise_scale, fading_variance, n_ues, rounds, latency, trials, seed.into())
        .map_err(js_err)
}

#[wasm_bindgen]
pub fn speedup_curve(m: f64, tau: f64, d_max: usize) -> Result<Vec<f64>, JsError> {
    speedup_curve_native(m, tau, d_max).map_err(js_err)
}
