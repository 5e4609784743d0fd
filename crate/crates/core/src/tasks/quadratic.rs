//! Least-squares tasks: `f_n(w) = ||A_n w - b_n||^2 / (2 m_n)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{symmetric_extremes, LocalData, Objective};
use crate::error::{Error, Result};
use crate::vector::{dot, ModelVector};

const MAX_REDRAWS: usize = 100;

/// Generator settings for [`generate_quadratic`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSpec {
    pub d: usize,
    pub n_ues: usize,
    pub samples_per_ue: usize,
    /// 0 gives a common local optimum, 1 spreads local optima by about one unit per coordinate.
    pub heterogeneity: f64,
    /// Target `lambda / mu` of the averaged Hessian.
    pub conditioning: f64,
    /// Standard deviation of additive target noise.
    pub target_noise: f64,
}

impl QuadraticSpec {
    pub fn new(d: usize, n_ues: usize, samples_per_ue: usize, heterogeneity: f64, conditioning: f64) -> Self {
        QuadraticSpec { d, n_ues, samples_per_ue, heterogeneity, conditioning, target_noise: 0.0 }
    }

    fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n_ues == 0 || self.samples_per_ue == 0 {
            return Err(Error::invalid("task", "d, n_ues and samples_per_ue must be >= 1"));
        }
        if self.n_ues * self.samples_per_ue < self.d {
            return Err(Error::invalid("samples_per_ue", "n_ues * samples_per_ue must be >= d"));
        }
        if !(0.0..=1.0).contains(&self.heterogeneity) {
            return Err(Error::invalid("heterogeneity", format!("{} outside [0, 1]", self.heterogeneity)));
        }
        if !(self.conditioning >= 1.0 && self.conditioning.is_finite()) {
            return Err(Error::invalid("conditioning", format!("{} must be finite and >= 1", self.conditioning)));
        }
        if !(self.target_noise >= 0.0 && self.target_noise.is_finite()) {
            return Err(Error::invalid("target_noise", format!("{} must be finite and >= 0", self.target_noise)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct QuadraticTask {
    d: usize,
    ues: Vec<LocalData>,
    hessian: DMatrix<f64>,
    linear: DVector<f64>,
    offset: f64,
    w_star: ModelVector,
    regenerated: bool,
}

/// Equality of task content; the generation flag is ignored.
impl PartialEq for QuadraticTask {
    fn eq(&self, other: &Self) -> bool {
        self.ues == other.ues && self.w_star == other.w_star
    }
}

impl QuadraticTask {
    /// Builds a task from explicit per-UE designs and targets and solves for `w*`.
    pub fn from_parts(ues: Vec<LocalData>) -> Result<Self> {
        let (hessian, linear, offset) = moments(&ues)?;
        let w_star = solve_spd(&hessian, &linear)?;
        Ok(QuadraticTask { d: hessian.nrows(), ues, hessian, linear, offset, w_star, regenerated: false })
    }

    /// Like [`QuadraticTask::from_parts`] but trusts a stored optimum.
    pub(crate) fn with_w_star(ues: Vec<LocalData>, w_star: ModelVector) -> Result<Self> {
        let (hessian, linear, offset) = moments(&ues)?;
        crate::error::check_dim(hessian.nrows(), w_star.dim())?;
        Ok(QuadraticTask { d: hessian.nrows(), ues, hessian, linear, offset, w_star, regenerated: false })
    }

    pub fn local_data(&self) -> &[LocalData] {
        &self.ues
    }

    /// The averaged Hessian `H`.
    pub fn averaged_hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    /// Set when a singular sample design was drawn and replaced.
    pub fn regenerated(&self) -> bool {
        self.regenerated
    }
}

fn moments(ues: &[LocalData]) -> Result<(DMatrix<f64>, DVector<f64>, f64)> {
    let Some(first) = ues.first() else {
        return Err(Error::invalid("n_ues", "must be >= 1"));
    };
    let d = first.d;
    let n = ues.len() as f64;
    let mut h = DMatrix::zeros(d, d);
    let mut c = DVector::zeros(d);
    let mut offset = 0.0;
    for u in ues {
        crate::error::check_dim(d, u.d)?;
        h += u.weighted_gram(|_| 1.0);
        let m = u.len() as f64;
        for i in 0..u.len() {
            let r = u.row(i);
            let b = u.target(i);
            for a in 0..d {
                c[a] += r[a] * b / m;
            }
            offset += b * b / (2.0 * m);
        }
    }
    h /= n;
    c /= n;
    offset /= n;
    Ok((h, c, offset))
}

fn solve_spd(h: &DMatrix<f64>, c: &DVector<f64>) -> Result<ModelVector> {
    let chol = h
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("averaged Hessian is not positive definite".into()))?;
    Ok(chol.solve(c).iter().copied().collect())
}

fn sym_power(m: &DMatrix<f64>, p: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let v = &eig.eigenvectors;
    let diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| x.powf(p)));
    let out = v * diag * v.transpose();
    (&out + out.transpose()) * 0.5
}

/// Symmetric positive-definite target with spectrum `[1, conditioning]`,
/// nonnegative off-diagonals and strict diagonal dominance.
fn target_hessian<R: Rng + ?Sized>(d: usize, conditioning: f64, rng: &mut R) -> DMatrix<f64> {
    if conditioning == 1.0 || d == 1 {
        return DMatrix::identity(d, d);
    }
    let diag: Vec<f64> = (0..d).map(|i| 1.0 + (conditioning - 1.0) * i as f64 / (d - 1) as f64).collect();
    let mut h0 = DMatrix::from_diagonal(&DVector::from_vec(diag.clone()));
    for i in 0..d {
        for j in i + 1..d {
            let e = 0.1 * rng.random::<f64>() * diag[i].min(diag[j]) / (d - 1) as f64;
            h0[(i, j)] = e;
            h0[(j, i)] = e;
        }
    }
    let (lo, hi) = symmetric_extremes(&h0);
    if hi - lo <= 1e-12 * hi {
        return h0;
    }
    let a = (conditioning - 1.0) / (hi - lo);
    let b = 1.0 - a * lo;
    let h = &h0 * a + DMatrix::identity(d, d) * b;
    let dominant = (0..d).all(|i| {
        let off: f64 = (0..d).filter(|&j| j != i).map(|j| h[(i, j)]).sum();
        h[(i, i)] > off
    });
    if dominant {
        h
    } else {
        h0
    }
}

/// Random least-squares task whose averaged Hessian is a diagonally dominant
/// matrix with condition number `conditioning`.
///
/// Each UE's design is a Rademacher matrix mapped through a common whitening
/// transform, so the pooled second moment equals the target exactly. Targets
/// are `A_n (w_true + heterogeneity * u_n) + target_noise * eps` with
/// `w_true, u_n, eps` standard normal.
pub fn generate_quadratic<R: Rng + ?Sized>(spec: &QuadraticSpec, rng: &mut R) -> Result<QuadraticTask> {
    spec.validate()?;
    let (d, n, m) = (spec.d, spec.n_ues, spec.samples_per_ue);
    let h_target = target_hessian(d, spec.conditioning, rng);

    let mut regenerated = false;
    let mut attempt = 0;
    let (designs, s) = loop {
        let designs: Vec<DMatrix<f64>> = (0..n)
            .map(|_| DMatrix::from_fn(m, d, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 }))
            .collect();
        let mut s = DMatrix::zeros(d, d);
        for z in &designs {
            s += z.transpose() * z;
        }
        s /= (n * m) as f64;
        let (lo, hi) = symmetric_extremes(&s);
        if lo > 1e-8 * hi {
            break (designs, s);
        }
        attempt += 1;
        regenerated = true;
        log::warn!("singular sample design on attempt {attempt}; redrawing");
        if attempt >= MAX_REDRAWS {
            return Err(Error::Degenerate(format!("sample design still singular after {attempt} redraws")));
        }
    };
    let transform = sym_power(&s, -0.5) * sym_power(&h_target, 0.5);

    let w_true: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let mut ues = Vec::with_capacity(n);
    for z in designs {
        let a = z * &transform;
        let local_opt: Vec<f64> = w_true
            .iter()
            .map(|&x| x + spec.heterogeneity * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut rows = Vec::with_capacity(m * d);
        let mut targets = Vec::with_capacity(m);
        for i in 0..m {
            let row: Vec<f64> = (0..d).map(|j| a[(i, j)]).collect();
            let mut b = dot(&row, &local_opt);
            if spec.target_noise > 0.0 {
                b += spec.target_noise * rng.sample::<f64, _>(StandardNormal);
            }
            rows.extend_from_slice(&row);
            targets.push(b);
        }
        ues.push(LocalData::new(d, rows, targets)?);
    }
    let mut task = QuadraticTask::from_parts(ues)?;
    task.regenerated = regenerated;
    Ok(task)
}

impl Objective for QuadraticTask {
    fn dim(&self) -> usize {
        self.d
    }

    fn n_ues(&self) -> usize {
        self.ues.len()
    }

    fn samples(&self, ue: usize) -> usize {
        self.ues[ue].len()
    }

    #[inline]
    fn add_sample_gradient(&self, w: &[f64], ue: usize, sample: usize, out: &mut [f64]) {
        let data = &self.ues[ue];
        let row = data.row(sample);
        let r = dot(row, w) - data.target(sample);
        for (o, a) in out.iter_mut().zip(row) {
            *o += r * a;
        }
    }

    fn local_loss(&self, w: &[f64], ue: usize) -> f64 {
        let data = &self.ues[ue];
        let mut s = 0.0;
        for i in 0..data.len() {
            let r = dot(data.row(i), w) - data.target(i);
            s += r * r;
        }
        s / (2.0 * data.len() as f64)
    }

    fn w_star(&self) -> &ModelVector {
        &self.w_star
    }

    fn hessian(&self, _w: &[f64]) -> DMatrix<f64> {
        self.hessian.clone()
    }

    fn local_hessian(&self, _w: &[f64], ue: usize) -> DMatrix<f64> {
        self.ues[ue].weighted_gram(|_| 1.0)
    }

    fn curvature(&self) -> (f64, f64) {
        symmetric_extremes(&self.hessian)
    }

    /// `w^T H w / 2 - c^T w + e`, which equals the mean of the local losses.
    fn loss(&self, w: &[f64]) -> f64 {
        let d = self.d;
        let mut quad = 0.0;
        for i in 0..d {
            let mut hw = 0.0;
            for j in 0..d {
                hw += self.hessian[(i, j)] * w[j];
            }
            quad += w[i] * hw;
        }
        let lin: f64 = (0..d).map(|i| self.linear[i] * w[i]).sum();
        0.5 * quad - lin + self.offset
    }
}
