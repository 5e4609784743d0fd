//! Error metrics, theoretical bound curves, rate fits and speedup accounting.

use crate::algorithms::GlobalTrace;
use crate::alpha_geometry::alpha_norm_pow;
use crate::error::{check_dim, Error, Result};

/// One row of a trial-averaged trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    /// Simulated time in local-round units.
    pub wall_units: f64,
    /// `||w_mean - w*||_alpha^alpha`.
    pub err_alpha: f64,
    /// `||w_mean - w*||_2`.
    pub err_l2: f64,
    pub loss: f64,
    pub lemma3_lhs: Option<f64>,
    pub lemma3_rhs: Option<f64>,
    pub bound_value: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (usize, usize),
    /// Points actually used.
    pub points: usize,
}

/// `||w - w*||_alpha^alpha`.
pub fn alpha_error(w: &[f64], w_star: &[f64], alpha: f64) -> Result<f64> {
    check_dim(w_star.len(), w.len())?;
    let diff: Vec<f64> = w.iter().zip(w_star).map(|(a, b)| a - b).collect();
    alpha_norm_pow(&diff, alpha)
}

/// Constants entering the convergence bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub theta: f64,
    pub alpha: f64,
    /// Interference moment bound `C`.
    pub c: f64,
    pub d: usize,
    pub g: f64,
    /// Local steps `M`.
    pub m: usize,
    pub lambda_smooth: f64,
    /// Fading standard deviation.
    pub sigma: f64,
    pub n: usize,
    pub mu: f64,
    pub l: f64,
}

impl BoundParams {
    /// `mu M L - alpha + 1`; the bounds are infinite unless this is positive.
    pub fn denominator(&self) -> f64 {
        self.mu * self.m as f64 * self.l - self.alpha + 1.0
    }

    fn prefix(&self, k: usize) -> f64 {
        let den = self.denominator();
        if den <= 0.0 {
            return f64::INFINITY;
        }
        4.0 * self.theta.powf(self.alpha) / den / (k as f64).powf(self.alpha - 1.0)
    }

    fn dim_factor(&self) -> f64 {
        (self.d as f64).powf(1.0 - 1.0 / self.alpha)
    }
}

/// Compute-and-wait bound on `E ||w_k - w*||_alpha^alpha`.
pub fn theorem1_bound(k: usize, p: &BoundParams) -> f64 {
    let a = p.alpha;
    let m = p.m as f64;
    let inner = (p.lambda_smooth * m).powf(a) + p.sigma.powf(a) / (p.n as f64).powf(a / 2.0);
    let numer = p.c + p.dim_factor() * (p.g * m).powf(a) * inner;
    p.prefix(k) * numer
}

/// Zero-wait bound on `E ||w_mean_k - w*||_alpha^alpha` with latency `d_latency`.
pub fn theorem2_bound(k: usize, p: &BoundParams, d_latency: usize) -> f64 {
    let a = p.alpha;
    let m = p.m as f64;
    let fading = (p.sigma * m * p.g).powf(a) * p.dim_factor() / (p.n as f64).powf(a / 2.0);
    let drift = p.dim_factor()
        * 2f64.powf(a)
        * (p.lambda_smooth * (1.0 + d_latency as f64) * p.g).powf(a)
        * m.powf(2.0 * a);
    p.prefix(k) * (p.c + fading + drift)
}

/// Least-squares line through `(ln k, ln err)` for `k` in `[k_low, k_high]`.
///
/// Non-positive errors are skipped with a warning; fewer than 10 usable
/// points is an error.
pub fn fit_slope(points: &[(usize, f64)], k_low: usize, k_high: usize) -> Result<SlopeFit> {
    if k_low < 2 || k_high < k_low {
        return Err(Error::invalid("window", format!("[{k_low}, {k_high}] needs 2 <= k_low <= k_high")));
    }
    let mut skipped = 0;
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|(k, _)| (k_low..=k_high).contains(k))
        .filter_map(|&(k, e)| {
            if e > 0.0 && e.is_finite() {
                Some(((k as f64).ln(), e.ln()))
            } else {
                skipped += 1;
                None
            }
        })
        .collect();
    if skipped > 0 {
        log::warn!("fit_slope skipped {skipped} non-positive errors");
    }
    if xy.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "{} usable points in [{k_low}, {k_high}], need 10",
            xy.len()
        )));
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = xy.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all fit points share one k".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(SlopeFit { exponent: slope, intercept, r_squared, window: (k_low, k_high), points: xy.len() })
}

/// `4 eta^2 M^2 D^2 G^2`.
pub fn lemma3_rhs(eta: f64, m: usize, d_latency: usize, g: f64) -> f64 {
    let s = eta * m as f64 * d_latency as f64 * g;
    4.0 * s * s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma3Check {
    pub max_ratio: f64,
    pub worst_round: usize,
    pub rounds_checked: usize,
}

/// Largest `max_n ||w_n - w_mean||^2 / (4 eta_{k-D}^2 M^2 D^2 G^2)` over the
/// recorded rounds. A record for round `k` holds iterate `k + 1`, so only
/// records with `k + 1 > D` are checked.
pub fn lemma3_check(
    trace: &GlobalTrace,
    eta: impl Fn(usize) -> f64,
    m: usize,
    d_latency: usize,
    g: f64,
) -> Result<Lemma3Check> {
    if d_latency == 0 {
        return Err(Error::invalid("latency", "the deviation bound needs D >= 1"));
    }
    let mut best = Lemma3Check { max_ratio: 0.0, worst_round: 0, rounds_checked: 0 };
    for rec in &trace.records {
        let iterate = rec.round + 1;
        if iterate <= d_latency {
            continue;
        }
        let lhs = rec
            .max_deviation_sq
            .ok_or_else(|| Error::InsufficientData(format!("round {} has no deviation data", rec.round)))?;
        let rhs = lemma3_rhs(eta(iterate - d_latency), m, d_latency, g);
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        best.rounds_checked += 1;
        if ratio > best.max_ratio || best.rounds_checked == 1 {
            best.max_ratio = ratio;
            best.worst_round = rec.round;
        }
    }
    if best.rounds_checked == 0 {
        return Err(Error::InsufficientData("no recorded rounds beyond the latency".into()));
    }
    Ok(best)
}

/// Wall-time ratio of compute-and-wait to zero-wait training:
/// `(M (1 + D) + tau_local) / (M + tau_global)`.
pub fn speedup(m: f64, d_latency: f64, tau_local: f64, tau_global: f64) -> Result<f64> {
    if !(m > 0.0) || d_latency < 0.0 || tau_local < 0.0 || tau_global < 0.0 {
        return Err(Error::invalid("speedup", "needs M > 0 and nonnegative D and taus"));
    }
    Ok((m * (1.0 + d_latency) + tau_local) / (m + tau_global))
}

/// Best single `tau = tau_local = tau_global` on a grid over `[lo, hi]`,
/// minimizing the worst relative error against `(D, target)` pairs. Returns
/// `(tau, worst relative error)`.
pub fn fit_speedup_tau(m: f64, targets: &[(f64, f64)], lo: f64, hi: f64, steps: usize) -> Result<(f64, f64)> {
    if targets.is_empty() || steps == 0 || hi < lo {
        return Err(Error::invalid("targets", "need targets, steps >= 1 and lo <= hi"));
    }
    let worst = |tau: f64| -> Result<f64> {
        let mut w = 0.0f64;
        for &(d, target) in targets {
            w = w.max((speedup(m, d, tau, tau)? / target - 1.0).abs());
        }
        Ok(w)
    };
    let mut best = (lo, worst(lo)?);
    for i in 1..=steps {
        let tau = lo + (hi - lo) * i as f64 / steps as f64;
        let e = worst(tau)?;
        if e < best.1 {
            best = (tau, e);
        }
    }
    Ok(best)
}
