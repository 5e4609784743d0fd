//! Uplink at the matched-filter output: `g = (1/N) sum_n h_n g_n + xi`.
//!
//! Fading is a real nonnegative gain with unit mean; power control has already
//! removed path loss, so there is no distance model. The downlink broadcast is
//! error-free.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{check_dim, Error, Result};
use crate::stable_noise::{sample_stable_vector, StableNoiseParams};
use crate::vector::ModelVector;

/// Unit-mean channel-gain distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingModel {
    /// `h = 1`.
    DeterministicUnit,
    /// Rayleigh amplitude with scale `sqrt(2/pi)`; variance `4/pi - 1`.
    RayleighUnitMean,
    /// Gamma with shape `1/variance` and scale `variance`.
    GammaUnitMean { variance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingKind {
    Deterministic,
    Rayleigh,
    Gamma,
}

impl FromStr for FadingKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "deterministic" | "deterministic-unit" | "none" => Ok(FadingKind::Deterministic),
            "rayleigh" | "rayleigh-unit-mean" => Ok(FadingKind::Rayleigh),
            "gamma" | "gamma-unit-mean" => Ok(FadingKind::Gamma),
            other => Err(format!("unknown fading kind `{other}` (deterministic|rayleigh|gamma)")),
        }
    }
}

impl fmt::Display for FadingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FadingKind::Deterministic => "deterministic",
            FadingKind::Rayleigh => "rayleigh",
            FadingKind::Gamma => "gamma",
        })
    }
}

pub const RAYLEIGH_UNIT_MEAN_SCALE: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

impl FadingModel {
    /// Builds a model from a kind and a variance; the variance is ignored for
    /// the deterministic and Rayleigh kinds. A gamma model with zero variance
    /// degenerates to the deterministic one.
    pub fn new(kind: FadingKind, variance: f64) -> Result<Self> {
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(Error::invalid("fading_variance", format!("{variance} must be finite and >= 0")));
        }
        Ok(match kind {
            FadingKind::Deterministic => FadingModel::DeterministicUnit,
            FadingKind::Rayleigh => FadingModel::RayleighUnitMean,
            FadingKind::Gamma if variance == 0.0 => FadingModel::DeterministicUnit,
            FadingKind::Gamma => FadingModel::GammaUnitMean { variance },
        })
    }

    pub fn variance(&self) -> f64 {
        match *self {
            FadingModel::DeterministicUnit => 0.0,
            FadingModel::RayleighUnitMean => 4.0 / PI - 1.0,
            FadingModel::GammaUnitMean { variance } => variance,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            FadingModel::DeterministicUnit => 1.0,
            FadingModel::RayleighUnitMean => {
                let u: f64 = 1.0 - rng.random::<f64>();
                RAYLEIGH_UNIT_MEAN_SCALE * (-2.0 * u.ln()).sqrt()
            }
            FadingModel::GammaUnitMean { variance } => Gamma::new(1.0 / variance, variance)
                .expect("shape and scale are positive")
                .sample(rng),
        }
    }
}

/// Fading and interference settings of the uplink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub fading: FadingModel,
    pub noise: StableNoiseParams,
}

impl ChannelConfig {
    /// Unit gains, no interference.
    pub fn ideal() -> Self {
        ChannelConfig {
            fading: FadingModel::DeterministicUnit,
            noise: StableNoiseParams::new(2.0, 0.0).expect("valid"),
        }
    }
}

/// One round's channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    pub gains: Vec<f64>,
    pub noise: ModelVector,
}

/// Draws `n_ues` i.i.d. gains from the fading stream and one interference
/// vector from the noise stream.
pub fn draw_channel<F: Rng + ?Sized, N: Rng + ?Sized>(
    fading: &FadingModel,
    noise: &StableNoiseParams,
    n_ues: usize,
    d: usize,
    fading_rng: &mut F,
    noise_rng: &mut N,
) -> Result<ChannelDraw> {
    if n_ues == 0 {
        return Err(Error::invalid("n_ues", "must be >= 1"));
    }
    let gains = (0..n_ues).map(|_| fading.sample(fading_rng)).collect();
    let noise = sample_stable_vector(noise, d, noise_rng)?;
    Ok(ChannelDraw { gains, noise })
}

/// Superposes faded gradients and adds the interference vector.
pub fn ota_aggregate(local_grads: &[ModelVector], draw: &ChannelDraw) -> Result<ModelVector> {
    let d = draw.noise.dim();
    check_dim(draw.gains.len(), local_grads.len())?;
    let mut acc = ModelVector::zeros(d);
    for (g, &h) in local_grads.iter().zip(&draw.gains) {
        check_dim(d, g.dim())?;
        acc.axpy(h, g);
    }
    let n = local_grads.len() as f64;
    for (a, xi) in acc.iter_mut().zip(draw.noise.iter()) {
        *a = *a / n + xi;
    }
    Ok(acc)
}
