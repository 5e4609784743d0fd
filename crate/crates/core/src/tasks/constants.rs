//! Curvature, gradient and interference constants of a task.

use rand::Rng;
use rand_distr::StandardNormal;

use super::Objective;
use crate::error::{Error, Result};
use crate::stable_noise::{interference_moment_bound, StableNoiseParams};
use crate::vector::ModelVector;

/// Safety factor applied to the probed gradient-norm maximum.
pub const G_INFLATION: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskConstants {
    /// Strong convexity.
    pub mu: f64,
    /// Smoothness.
    pub lambda_smooth: f64,
    /// Bound on single-sample gradient norms over the probe ball.
    pub g: f64,
    /// Bound on `E ||xi||_alpha^alpha`; infinite when `alpha < 2`.
    pub c: f64,
}

/// Estimates `(mu, lambda, G, C)`.
///
/// `G` is the largest single-sample gradient norm seen at `w*` and at
/// `n_probes` points of the ball of radius `probe_radius` around it (half in
/// the interior, half on the sphere), times [`G_INFLATION`].
pub fn estimate_constants<T: Objective + ?Sized, R: Rng + ?Sized>(
    task: &T,
    noise: &StableNoiseParams,
    probe_radius: f64,
    n_probes: usize,
    rng: &mut R,
) -> Result<TaskConstants> {
    if !(probe_radius >= 0.0 && probe_radius.is_finite()) {
        return Err(Error::invalid("probe_radius", format!("{probe_radius} must be finite and >= 0")));
    }
    let d = task.dim();
    let (mu, lambda_smooth) = task.curvature();
    let w_star = task.w_star();
    let mut g = task.max_sample_gradient_norm(w_star);
    for i in 0..n_probes {
        let mut dir: ModelVector = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = dir.norm2();
        if n == 0.0 {
            continue;
        }
        let r = if i % 2 == 0 {
            probe_radius
        } else {
            probe_radius * rng.random::<f64>().powf(1.0 / d as f64)
        };
        dir.scale(r / n);
        dir.axpy(1.0, w_star);
        g = g.max(task.max_sample_gradient_norm(&dir));
    }
    Ok(TaskConstants {
        mu,
        lambda_smooth,
        g: G_INFLATION * g,
        c: interference_moment_bound(noise, d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::tasks::{LocalData, QuadraticTask};

    fn unit_task() -> QuadraticTask {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rows = vec![1.0, 0.0, 0.0, 1.0, s, s, s, -s];
        let ue = LocalData::new(2, rows, vec![0.0; 4]).unwrap();
        QuadraticTask::from_parts(vec![ue]).unwrap()
    }

    #[test]
    fn gaussian_interference_constant() {
        let p = StableNoiseParams::new(2.0, 1.0).unwrap();
        let c = estimate_constants(&unit_task(), &p, 1.0, 10, &mut seeded(1)).unwrap();
        assert!((c.c - 2.0 * 2.0).abs() < 1e-12);
        let d3 = QuadraticTask::from_parts(vec![LocalData::new(3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], vec![0.0; 3]).unwrap()]).unwrap();
        let c3 = estimate_constants(&d3, &p, 1.0, 10, &mut seeded(1)).unwrap();
        assert!((c3.c - 6.0).abs() < 1e-12);
    }

    #[test]
    fn heavy_tailed_interference_has_no_finite_alpha_moment() {
        let p = StableNoiseParams::new(1.6, 1.0).unwrap();
        let c = estimate_constants(&unit_task(), &p, 1.0, 10, &mut seeded(1)).unwrap();
        assert!(c.c.is_infinite());
    }

    #[test]
    fn g_is_reproducible_for_bounded_rows() {
        let p = StableNoiseParams::new(2.0, 0.0).unwrap();
        let gs: Vec<f64> = (0..5)
            .map(|s| estimate_constants(&unit_task(), &p, 1.0, 500, &mut seeded(s)).unwrap().g)
            .collect();
        for g in &gs {
            assert!(g.is_finite());
            // Unit rows and a unit ball around w* = 0 cap every |a (a.w)| at 1.
            assert!(*g <= G_INFLATION + 1e-12);
            assert!((g / gs[0] - 1.0).abs() < 0.1);
        }
    }

    #[test]
    fn curvature_is_passed_through() {
        let p = StableNoiseParams::new(2.0, 0.0).unwrap();
        let c = estimate_constants(&unit_task(), &p, 0.0, 0, &mut seeded(1)).unwrap();
        assert!((c.mu - 0.5).abs() < 1e-12 && (c.lambda_smooth - 0.5).abs() < 1e-12);
        assert_eq!(c.g, 0.0);
        assert!(estimate_constants(&unit_task(), &p, -1.0, 0, &mut seeded(1)).is_err());
    }
}
