//! L2-regularized logistic regression with labels in `{-1, +1}`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{symmetric_extremes, LocalData, Objective};
use crate::error::{Error, Result};
use crate::vector::{dot, ModelVector};

/// Gradient-norm target when solving for `w*`.
pub const OPTIMUM_TOLERANCE: f64 = 1e-10;
const MAX_SOLVER_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticSpec {
    pub d: usize,
    pub n_ues: usize,
    pub samples_per_ue: usize,
    /// Shifts each UE's feature mean and labelling direction.
    pub heterogeneity: f64,
    /// L2 weight `r > 0`.
    pub regularization: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticTask {
    d: usize,
    ues: Vec<LocalData>,
    regularization: f64,
    w_star: ModelVector,
    smoothness: f64,
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogisticTask {
    /// Builds a task from labelled data (`targets` in `{-1, +1}`) and solves for
    /// `w*` by full-gradient descent.
    pub fn from_parts(ues: Vec<LocalData>, regularization: f64) -> Result<Self> {
        let mut task = Self::unsolved(ues, regularization)?;
        task.w_star = task.solve()?;
        Ok(task)
    }

    pub(crate) fn with_w_star(ues: Vec<LocalData>, regularization: f64, w_star: ModelVector) -> Result<Self> {
        let mut task = Self::unsolved(ues, regularization)?;
        crate::error::check_dim(task.d, w_star.dim())?;
        task.w_star = w_star;
        Ok(task)
    }

    fn unsolved(ues: Vec<LocalData>, regularization: f64) -> Result<Self> {
        if !(regularization > 0.0 && regularization.is_finite()) {
            return Err(Error::invalid("regularization", format!("{regularization} must be finite and > 0")));
        }
        let Some(first) = ues.first() else {
            return Err(Error::invalid("n_ues", "must be >= 1"));
        };
        let d = first.d;
        for u in &ues {
            crate::error::check_dim(d, u.d)?;
            if let Some(bad) = u.targets.iter().find(|&&y| y != 1.0 && y != -1.0) {
                return Err(Error::invalid("label", format!("{bad} is not -1 or +1")));
            }
        }
        let mut cov = DMatrix::zeros(d, d);
        for u in &ues {
            cov += u.weighted_gram(|_| 1.0);
        }
        cov /= ues.len() as f64;
        let (_, top) = symmetric_extremes(&cov);
        Ok(LogisticTask {
            d,
            ues,
            regularization,
            w_star: ModelVector::zeros(d),
            smoothness: regularization + 0.25 * top.max(0.0),
        })
    }

    fn solve(&self) -> Result<ModelVector> {
        let step = 1.0 / self.smoothness;
        let mut w = ModelVector::zeros(self.d);
        for _ in 0..MAX_SOLVER_ITERS {
            let g = self.global_gradient(&w)?;
            if g.norm2() <= OPTIMUM_TOLERANCE {
                return Ok(w);
            }
            w.axpy(-step, &g);
        }
        Err(Error::Degenerate(format!(
            "gradient descent did not reach |grad| <= {OPTIMUM_TOLERANCE} in {MAX_SOLVER_ITERS} steps"
        )))
    }

    pub fn regularization(&self) -> f64 {
        self.regularization
    }

    pub fn local_data(&self) -> &[LocalData] {
        &self.ues
    }
}

/// Gaussian features around a per-UE mean `heterogeneity * u_n`, with labels
/// drawn from a logistic model whose direction is also shifted per UE.
pub fn generate_logistic<R: Rng + ?Sized>(spec: &LogisticSpec, rng: &mut R) -> Result<LogisticTask> {
    if spec.d == 0 || spec.n_ues == 0 || spec.samples_per_ue == 0 {
        return Err(Error::invalid("task", "d, n_ues and samples_per_ue must be >= 1"));
    }
    if !(0.0..=1.0).contains(&spec.heterogeneity) {
        return Err(Error::invalid("heterogeneity", format!("{} outside [0, 1]", spec.heterogeneity)));
    }
    let d = spec.d;
    let w_true: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let mut ues = Vec::with_capacity(spec.n_ues);
    for _ in 0..spec.n_ues {
        let shift: Vec<f64> = (0..d).map(|_| spec.heterogeneity * rng.sample::<f64, _>(StandardNormal)).collect();
        let dir: Vec<f64> = w_true
            .iter()
            .map(|&x| x + spec.heterogeneity * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut rows = Vec::with_capacity(spec.samples_per_ue * d);
        let mut labels = Vec::with_capacity(spec.samples_per_ue);
        for _ in 0..spec.samples_per_ue {
            let x: Vec<f64> = shift.iter().map(|&s| s + rng.sample::<f64, _>(StandardNormal)).collect();
            let p = sigmoid(dot(&x, &dir));
            labels.push(if rng.random::<f64>() < p { 1.0 } else { -1.0 });
            rows.extend_from_slice(&x);
        }
        ues.push(LocalData::new(d, rows, labels)?);
    }
    LogisticTask::from_parts(ues, spec.regularization)
}

impl Objective for LogisticTask {
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
        let x = data.row(sample);
        let y = data.target(sample);
        let coef = -y * sigmoid(-y * dot(x, w));
        for ((o, a), wi) in out.iter_mut().zip(x).zip(w) {
            *o += coef * a + self.regularization * wi;
        }
    }

    fn local_loss(&self, w: &[f64], ue: usize) -> f64 {
        let data = &self.ues[ue];
        let mut s = 0.0;
        for i in 0..data.len() {
            s += log1p_exp(-data.target(i) * dot(data.row(i), w));
        }
        s / data.len() as f64 + 0.5 * self.regularization * dot(w, w)
    }

    fn w_star(&self) -> &ModelVector {
        &self.w_star
    }

    fn hessian(&self, w: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.d, self.d);
        for ue in 0..self.ues.len() {
            h += self.local_hessian(w, ue);
        }
        h / self.ues.len() as f64
    }

    fn local_hessian(&self, w: &[f64], ue: usize) -> DMatrix<f64> {
        let data = &self.ues[ue];
        let mut h = data.weighted_gram(|i| {
            let p = sigmoid(dot(data.row(i), w));
            p * (1.0 - p)
        });
        for i in 0..self.d {
            h[(i, i)] += self.regularization;
        }
        h
    }

    /// `(r, r + lambda_max(mean x x^T) / 4)`: valid on all of `R^d`.
    fn curvature(&self) -> (f64, f64) {
        (self.regularization, self.smoothness)
    }
}
