//! Signed powers, alpha-norms and alpha-positive-definiteness.
//!
//! `sgn(0) * |0|^p` is taken to be 0 for every `p >= 0`, which keeps
//! `<w, w^<alpha-1>> = ||w||_alpha^alpha` true coordinate by coordinate.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::vector::{dot, ModelVector};

fn check_alpha(alpha: f64) -> Result<()> {
    if (1.0..=2.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::invalid("alpha", format!("{alpha} outside [1, 2]")))
    }
}

#[inline]
fn signed_pow(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(p)
    }
}

/// Componentwise `sgn(w_i) |w_i|^p`.
pub fn signed_power(w: &[f64], p: f64) -> ModelVector {
    w.iter().map(|&x| signed_pow(x, p)).collect()
}

/// `sum_i |w_i|^alpha`, i.e. `||w||_alpha^alpha`.
pub fn alpha_norm_pow(w: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(norm_pow_unchecked(w, alpha))
}

#[inline]
fn norm_pow_unchecked(w: &[f64], alpha: f64) -> f64 {
    if alpha == 2.0 {
        dot(w, w)
    } else {
        w.iter().map(|x| x.abs().powf(alpha)).sum()
    }
}

pub fn alpha_norm(w: &[f64], alpha: f64) -> Result<f64> {
    let s = alpha_norm_pow(w, alpha)?;
    Ok(if alpha == 2.0 { s.sqrt() } else { s.powf(1.0 / alpha) })
}

/// Right side minus left side of the alpha-norm expansion inequality
/// `||w + v||^a <= ||w||^a + a <w^<a-1>, v> + 4 ||v||^a`; never negative for
/// `a` in `[1, 2]`.
pub fn lemma1_gap(w: &[f64], v: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_dim(w.len(), v.len())?;
    let cross: f64 = w
        .iter()
        .zip(v)
        .map(|(&wi, &vi)| signed_pow(wi, alpha - 1.0) * vi)
        .sum();
    let sum: Vec<f64> = w.iter().zip(v).map(|(a, b)| a + b).collect();
    Ok(norm_pow_unchecked(w, alpha) + alpha * cross + 4.0 * norm_pow_unchecked(v, alpha)
        - norm_pow_unchecked(&sum, alpha))
}

/// `<v, Q v^<alpha-1>>`.
pub fn alpha_quadratic_form(q: &DMatrix<f64>, v: &[f64], alpha: f64) -> f64 {
    let sp = signed_power(v, alpha - 1.0);
    let d = v.len();
    let mut total = 0.0;
    for i in 0..d {
        let mut row = 0.0;
        for j in 0..d {
            row += q[(i, j)] * sp[j];
        }
        total += v[i] * row;
    }
    total
}

fn check_symmetric(q: &DMatrix<f64>) -> Result<()> {
    if !q.is_square() {
        return Err(Error::DimensionMismatch {
            expected: q.nrows(),
            found: q.ncols(),
        });
    }
    let scale = q.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let mut worst = 0.0_f64;
    for i in 0..q.nrows() {
        for j in 0..i {
            worst = worst.max((q[(i, j)] - q[(j, i)]).abs());
        }
    }
    if worst > 1e-12 * scale {
        Err(Error::NotSymmetric(worst))
    } else {
        Ok(())
    }
}

/// Outcome of a probabilistic alpha-positive-definiteness test.
#[derive(Debug, Clone, PartialEq)]
pub enum Definiteness {
    /// Every probe gave a positive form. Not a certificate.
    NoViolationFound { probes: usize },
    /// A probe with `||v||_alpha > 1` and `<v, Q v^<alpha-1>> <= 0`.
    Violated { witness: ModelVector, value: f64 },
}

impl Definiteness {
    pub fn is_positive(&self) -> bool {
        matches!(self, Definiteness::NoViolationFound { .. })
    }
}

fn random_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ModelVector {
    loop {
        let v: ModelVector = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        if v.iter().any(|&x| x != 0.0) {
            return v;
        }
    }
}

fn normalize_alpha(v: &mut ModelVector, alpha: f64, target: f64) {
    let n = norm_pow_unchecked(v, alpha).powf(1.0 / alpha);
    v.scale(target / n);
}

/// Monte-Carlo check of `<v, Q v^<alpha-1>> > 0` over probes with alpha-norm in `(1, 10]`.
pub fn is_alpha_positive_definite<R: Rng + ?Sized>(
    q: &DMatrix<f64>,
    alpha: f64,
    n_probes: usize,
    rng: &mut R,
) -> Result<Definiteness> {
    check_alpha(alpha)?;
    check_symmetric(q)?;
    let d = q.nrows();
    for _ in 0..n_probes {
        let mut v = random_direction(d, rng);
        let radius = 1.0 + 9.0 * (1.0 - rng.random::<f64>());
        normalize_alpha(&mut v, alpha, radius);
        let value = alpha_quadratic_form(q, &v, alpha);
        if value <= 0.0 {
            return Ok(Definiteness::Violated { witness: v, value });
        }
    }
    Ok(Definiteness::NoViolationFound { probes: n_probes })
}

fn contraction_ratio(q: &DMatrix<f64>, alpha: f64, step: f64, v: &[f64]) -> f64 {
    let d = v.len();
    let mut out = vec![0.0; d];
    for i in 0..d {
        let mut qv = 0.0;
        for j in 0..d {
            qv += q[(i, j)] * v[j];
        }
        out[i] = v[i] - step * qv;
    }
    norm_pow_unchecked(&out, alpha) / norm_pow_unchecked(v, alpha)
}

/// Probe set for induced-norm estimation: signed coordinate axes plus random
/// directions, all scaled to unit alpha-norm.
pub fn unit_probes<R: Rng + ?Sized>(d: usize, alpha: f64, n_probes: usize, rng: &mut R) -> Vec<ModelVector> {
    let mut probes = Vec::with_capacity(n_probes + 2 * d);
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut e = ModelVector::zeros(d);
            e[i] = s;
            probes.push(e);
        }
    }
    for _ in 0..n_probes {
        let mut v = random_direction(d, rng);
        normalize_alpha(&mut v, alpha, 1.0);
        probes.push(v);
    }
    probes
}

/// Lower estimate of the induced `||I - step Q||_alpha^alpha`: the best probe
/// ratio, refined by a short random local search around the best probe.
pub fn induced_alpha_norm_pow<R: Rng + ?Sized>(
    q: &DMatrix<f64>,
    alpha: f64,
    step: f64,
    probes: &[ModelVector],
    rng: &mut R,
) -> f64 {
    let Some((mut best_v, mut best)) = probes
        .iter()
        .map(|v| (v, contraction_ratio(q, alpha, step, v)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(v, r)| (v.clone(), r))
    else {
        return 0.0;
    };
    let d = best_v.dim();
    let mut radius = 0.25;
    for _ in 0..400 {
        let mut cand = best_v.clone();
        for x in cand.iter_mut() {
            *x += radius * rng.sample::<f64, _>(StandardNormal);
        }
        if cand.iter().all(|&x| x == 0.0) {
            continue;
        }
        let r = contraction_ratio(q, alpha, step, &cand);
        if r > best {
            best = r;
            normalize_alpha(&mut cand, alpha, 1.0);
            best_v = cand;
        } else {
            radius *= 0.99;
        }
    }
    debug_assert_eq!(best_v.dim(), d);
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionEstimate {
    /// Slope `L` in `||I - kQ||_alpha^alpha <= 1 - L k`.
    pub l: f64,
    /// Upper end of the step range the slope was verified on.
    pub kappa: f64,
    /// `(step, estimated induced norm)` per grid point.
    pub norms: Vec<(f64, f64)>,
    /// No grid point contracted; `l` and `kappa` are zero.
    pub degenerate: bool,
}

/// Estimates the contraction constants `(L, kappa)` of `I - kQ` on a step grid.
///
/// `kappa` is the first grid step whose estimated norm reaches 1 (or the last
/// step if none does) and `L` is the smallest `(1 - norm) / k` over the grid
/// steps below it.
pub fn estimate_contraction<R: Rng + ?Sized>(
    q: &DMatrix<f64>,
    alpha: f64,
    step_grid: &[f64],
    n_probes: usize,
    rng: &mut R,
) -> Result<ContractionEstimate> {
    check_alpha(alpha)?;
    check_symmetric(q)?;
    if step_grid.is_empty() {
        return Err(Error::invalid("step_grid", "empty"));
    }
    if step_grid[0] <= 0.0 || step_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("step_grid", "must be strictly positive and ascending"));
    }
    let probes = unit_probes(q.nrows(), alpha, n_probes, rng);
    let norms: Vec<(f64, f64)> = step_grid
        .iter()
        .map(|&k| (k, induced_alpha_norm_pow(q, alpha, k, &probes, rng)))
        .collect();
    let mut l = f64::INFINITY;
    let mut kappa = *step_grid.last().unwrap();
    let mut any = false;
    for &(k, n) in &norms {
        if n >= 1.0 {
            kappa = k;
            break;
        }
        any = true;
        l = l.min((1.0 - n) / k);
    }
    if !any {
        log::warn!("no contracting step on the grid; reporting L = 0");
        return Ok(ContractionEstimate {
            l: 0.0,
            kappa: 0.0,
            norms,
            degenerate: true,
        });
    }
    Ok(ContractionEstimate {
        l,
        kappa,
        norms,
        degenerate: false,
    })
}

/// Geometric grid of `n` steps between `lo` and `hi`.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).powf(1.0 / (n - 1) as f64);
    (0..n).map(|i| lo * ratio.powi(i as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_relative_eq;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest};
    use rand::Rng;

    #[test]
    fn signed_power_examples() {
        assert_eq!(signed_power(&[-2.0, 3.0], 2.0).as_slice(), &[-4.0, 9.0]);
        assert_eq!(signed_power(&[0.0, 0.0], 0.5).as_slice(), &[0.0, 0.0]);
        assert_eq!(signed_power(&[-5.0, 5.0], 0.0).as_slice(), &[-1.0, 1.0]);
        assert_eq!(signed_power(&[0.0], 0.0).as_slice(), &[0.0]);
    }

    #[test]
    fn alpha_norm_examples() {
        assert_eq!(alpha_norm(&[3.0, 4.0], 2.0).unwrap(), 5.0);
        assert_eq!(alpha_norm(&[1.0, 1.0, 1.0], 1.0).unwrap(), 3.0);
        assert_relative_eq!(alpha_norm(&[2.0, -2.0], 1.5).unwrap(), 2f64.powf(5.0 / 3.0), max_relative = 1e-14);
        assert!(alpha_norm(&[1.0], 0.5).is_err());
        assert!(alpha_norm(&[1.0], 2.5).is_err());
    }

    #[test]
    fn lemma1_gap_special_cases() {
        let w = [1.5, -0.3, 2.0];
        for alpha in [1.0, 1.3, 2.0] {
            assert_eq!(lemma1_gap(&w, &[0.0; 3], alpha).unwrap(), 0.0);
        }
        let v = [0.5, -1.0, 2.0];
        let vv: f64 = v.iter().map(|x| x * x).sum();
        assert_relative_eq!(lemma1_gap(&[0.0; 3], &v, 2.0).unwrap(), 3.0 * vv, max_relative = 1e-14);
        assert!(lemma1_gap(&[1.0], &[1.0, 2.0], 1.5).is_err());
    }

    #[test]
    fn lemma1_holds_on_random_triples() {
        let mut rng = seeded(3);
        for _ in 0..20_000 {
            let d = rng.random_range(1..=16);
            let alpha = rng.random_range(1.0..=2.0);
            let w = random_direction(d, &mut rng);
            let v = random_direction(d, &mut rng);
            assert!(lemma1_gap(&w, &v, alpha).unwrap() >= -1e-9);
        }
    }

    proptest! {
        #[test]
        fn signed_power_one_is_identity(w in proptest::collection::vec(-1e3f64..1e3, 1..12)) {
            let out = signed_power(&w, 1.0);
            prop_assert_eq!(out.as_slice(), w.as_slice());
        }

        #[test]
        fn alpha_norm_homogeneous(w in proptest::collection::vec(-10f64..10.0, 1..12), c in -5f64..5.0, alpha in 1f64..=2.0) {
            let scaled: Vec<f64> = w.iter().map(|x| c * x).collect();
            let lhs = alpha_norm(&scaled, alpha).unwrap();
            let rhs = c.abs() * alpha_norm(&w, alpha).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300) + 1e-300);
        }

        #[test]
        fn signed_power_inner_product_is_norm_power(w in proptest::collection::vec(-10f64..10.0, 1..12), alpha in 1f64..=2.0) {
            let sp = signed_power(&w, alpha - 1.0);
            let lhs = dot(&w, &sp);
            let rhs = alpha_norm_pow(&w, alpha).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        }

        #[test]
        fn two_norm_is_euclidean(w in proptest::collection::vec(-10f64..10.0, 1..12)) {
            let e = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((alpha_norm(&w, 2.0).unwrap() - e).abs() <= 1e-15 * e.max(1.0));
        }
    }

    #[test]
    fn identity_is_alpha_positive_definite() {
        let mut rng = seeded(4);
        for alpha in [1.0, 1.5, 2.0] {
            let id = DMatrix::<f64>::identity(5, 5);
            assert!(is_alpha_positive_definite(&id, alpha, 1000, &mut rng).unwrap().is_positive());
            let neg = -DMatrix::<f64>::identity(5, 5);
            match is_alpha_positive_definite(&neg, alpha, 1000, &mut rng).unwrap() {
                Definiteness::Violated { witness, value } => {
                    assert!(alpha_norm(&witness, alpha).unwrap() > 1.0);
                    assert!(value <= 0.0);
                }
                other => panic!("expected a witness, got {other:?}"),
            }
        }
    }

    #[test]
    fn ill_scaled_positive_diagonal_passes() {
        let q = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1e-3]));
        let res = is_alpha_positive_definite(&q, 1.5, 10_000, &mut seeded(5)).unwrap();
        assert!(res.is_positive());
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            is_alpha_positive_definite(&q, 1.5, 10, &mut seeded(6)),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn contraction_slope_for_gaussian_case() {
        let (mu, lam) = (0.5, 3.0);
        let q = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![mu, lam]));
        let grid = geometric_grid(1e-4 / lam, 1e-2 / lam, 12);
        let est = estimate_contraction(&q, 2.0, &grid, 500, &mut seeded(7)).unwrap();
        assert!(!est.degenerate);
        assert!((est.l / (2.0 * mu) - 1.0).abs() < 0.01, "L = {}", est.l);
    }

    #[test]
    fn contraction_identity_half_step() {
        let q = DMatrix::<f64>::identity(3, 3);
        let est = estimate_contraction(&q, 2.0, &[0.5], 200, &mut seeded(8)).unwrap();
        assert_relative_eq!(est.norms[0].1, 0.25, max_relative = 1e-9);
        assert_relative_eq!(est.l, 1.5, max_relative = 1e-9);
    }

    #[test]
    fn contraction_rejects_bad_grids() {
        let q = DMatrix::<f64>::identity(2, 2);
        assert!(estimate_contraction(&q, 2.0, &[], 10, &mut seeded(1)).is_err());
        assert!(estimate_contraction(&q, 2.0, &[0.2, 0.1], 10, &mut seeded(1)).is_err());
        let est = estimate_contraction(&q, 2.0, &[3.0, 4.0], 10, &mut seeded(1)).unwrap();
        assert!(est.degenerate);
        assert_eq!((est.l, est.kappa), (0.0, 0.0));
    }

    #[test]
    fn probing_agrees_with_dense_search() {
        let mut rng = seeded(9);
        let b = DMatrix::from_fn(4, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = &b * b.transpose() / 4.0 + DMatrix::<f64>::identity(4, 4) * 0.2;
        let lam = q.symmetric_eigenvalues().max();
        let step = 0.5 / lam;
        let probes = unit_probes(4, 1.5, 10_000, &mut rng);
        let est = induced_alpha_norm_pow(&q, 1.5, step, &probes, &mut rng);
        // oracle: plain random search over 10^6 directions, no refinement
        let mut oracle = 0.0_f64;
        let mut orng = seeded(10);
        for _ in 0..1_000_000 {
            let v = random_direction(4, &mut orng);
            oracle = oracle.max(contraction_ratio(&q, 1.5, step, &v));
        }
        assert!((est / oracle - 1.0).abs() < 0.05, "{est} vs {oracle}");
    }
}
