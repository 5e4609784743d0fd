//! Symmetric alpha-stable interference.
//!
//! Draws use the Chambers-Mallows-Stuck transform of a uniform angle and a unit
//! exponential. The law is zero-location and symmetric, so the S0 and S1
//! parameterizations coincide; with characteristic function
//! `exp(-|scale * t|^alpha)`, `alpha = 2` is a Gaussian with variance
//! `2 * scale^2`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::vector::ModelVector;

/// Default fraction of upper order statistics used by the Hill estimator.
pub const DEFAULT_HILL_FRACTION: f64 = 0.002;

/// Minimum sample count accepted by [`estimate_tail_index`].
pub const MIN_HILL_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableNoiseParams {
    alpha: f64,
    scale: f64,
}

impl StableNoiseParams {
    /// Tail index must lie in `(1, 2]`; `scale = 0` gives deterministic zero noise.
    pub fn new(alpha: f64, scale: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::invalid(
                "alpha",
                format!("tail index {alpha} outside (1, 2]; the convergence exponent alpha - 1 must be positive"),
            ));
        }
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::invalid("scale", format!("{scale} must be finite and >= 0")));
        }
        Ok(StableNoiseParams { alpha, scale })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_silent(&self) -> bool {
        self.scale == 0.0
    }
}

/// Draws a standard (unit-scale) symmetric alpha-stable variate.
fn standard_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    // open interval keeps cos(v) > 0
    let v = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break PI * (u - 0.5);
        }
    };
    let w = loop {
        let e: f64 = Exp1.sample(rng);
        if e > 0.0 {
            break e;
        }
    };
    if alpha == 2.0 {
        // sin(2v) / sqrt(cos v) * sqrt(w / cos v)
        return 2.0 * v.sin() * w.sqrt();
    }
    let cos_v = v.cos();
    (alpha * v).sin() / cos_v.powf(1.0 / alpha)
        * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

pub fn sample_stable<R: Rng + ?Sized>(params: &StableNoiseParams, rng: &mut R) -> f64 {
    if params.scale == 0.0 {
        return 0.0;
    }
    params.scale * standard_stable(params.alpha, rng)
}

pub fn sample_stable_vector<R: Rng + ?Sized>(
    params: &StableNoiseParams,
    d: usize,
    rng: &mut R,
) -> Result<ModelVector> {
    if d == 0 {
        return Err(Error::invalid("d", "dimension must be >= 1"));
    }
    Ok((0..d).map(|_| sample_stable(params, rng)).collect())
}

/// Hill estimate of the tail index from the largest `k_fraction` of `|samples|`.
pub fn estimate_tail_index(samples: &[f64], k_fraction: f64) -> Result<f64> {
    if samples.len() < MIN_HILL_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "Hill estimator needs at least {MIN_HILL_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if !(k_fraction > 0.0 && k_fraction <= 0.1) {
        return Err(Error::invalid("k_fraction", format!("{k_fraction} outside (0, 0.1]")));
    }
    let mut abs: Vec<f64> = samples.iter().map(|x| x.abs()).collect();
    if abs.iter().all(|&x| x == 0.0) {
        return Err(Error::Degenerate("all samples are zero".into()));
    }
    let k = ((k_fraction * abs.len() as f64) as usize).max(1);
    // descending partial sort: the k largest land in abs[..k], threshold at abs[k]
    abs.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
    let threshold = abs[k];
    if threshold <= 0.0 {
        return Err(Error::Degenerate("tail threshold is zero".into()));
    }
    let log_excess: f64 = abs[..k].iter().map(|&x| (x / threshold).ln()).sum();
    if log_excess <= 0.0 {
        return Err(Error::Degenerate("no spread among the upper order statistics".into()));
    }
    Ok(k as f64 / log_excess)
}

/// `E|X|^p` for a symmetric stable `X` with the given tail index and scale.
///
/// Finite for `-1 < p < alpha` (any `p > -1` when `alpha = 2`); returns
/// `f64::INFINITY` otherwise. In particular the order-`alpha` moment is
/// infinite whenever `alpha < 2`.
pub fn stable_abs_moment(alpha: f64, scale: f64, p: f64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    if p <= -1.0 {
        return f64::INFINITY;
    }
    let sqrt_pi = PI.sqrt();
    if alpha == 2.0 {
        return scale.powf(p) * 2f64.powf(p) * gamma((1.0 + p) / 2.0) / sqrt_pi;
    }
    if p >= alpha {
        return f64::INFINITY;
    }
    scale.powf(p) * 2f64.powf(p) * gamma((1.0 + p) / 2.0) * gamma(1.0 - p / alpha)
        / (sqrt_pi * gamma(1.0 - p / 2.0))
}

/// Bound `C` on `E[||xi||_alpha^alpha]` for a `d`-dimensional interference vector.
pub fn interference_moment_bound(params: &StableNoiseParams, d: usize) -> f64 {
    d as f64 * stable_abs_moment(params.alpha, params.scale, params.alpha)
}

/// Fraction of `samples` whose magnitude exceeds `t`.
pub fn exceedance_fraction(samples: &[f64], t: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|x| x.abs() > t).count() as f64 / samples.len() as f64
}
