//! Strongly convex federated objectives with known optima.
//!
//! UE `n` holds `m_n` samples and the local objective is the sample mean of a
//! per-sample loss; the global objective is the unweighted mean over UEs.

mod constants;
mod logistic;
mod quadratic;
mod snapshot;

pub use constants::{estimate_constants, TaskConstants, G_INFLATION};
pub use logistic::{generate_logistic, LogisticSpec, LogisticTask};
pub use quadratic::{generate_quadratic, QuadraticSpec, QuadraticTask};
pub use snapshot::{parse_snapshot, write_snapshot};

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::vector::ModelVector;

/// A federated finite-sum objective.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn n_ues(&self) -> usize;
    /// Number of local samples held by `ue`.
    fn samples(&self, ue: usize) -> usize;

    /// Adds the single-sample gradient at `w` to `out`. Panics on out-of-range
    /// indices; use [`Objective::stochastic_gradient`] for a checked variant.
    fn add_sample_gradient(&self, w: &[f64], ue: usize, sample: usize, out: &mut [f64]);

    /// Local objective `f_n(w)`.
    fn local_loss(&self, w: &[f64], ue: usize) -> f64;

    /// Global minimizer.
    fn w_star(&self) -> &ModelVector;

    /// Averaged Hessian `(1/N) sum_n H_n(w)`.
    fn hessian(&self, w: &[f64]) -> DMatrix<f64>;

    /// Hessian of `f_n` at `w`.
    fn local_hessian(&self, w: &[f64], ue: usize) -> DMatrix<f64>;

    /// Strong-convexity and smoothness constants `(mu, lambda)` of the global objective.
    fn curvature(&self) -> (f64, f64);

    /// Global objective `f(w)`.
    fn loss(&self, w: &[f64]) -> f64 {
        let n = self.n_ues();
        (0..n).map(|ue| self.local_loss(w, ue)).sum::<f64>() / n as f64
    }

    fn stochastic_gradient(&self, w: &[f64], sample: usize, ue: usize) -> Result<ModelVector> {
        self.check_point(w)?;
        self.check_ue(ue)?;
        let m = self.samples(ue);
        if sample >= m {
            return Err(Error::IndexOutOfRange { what: "sample", index: sample, limit: m });
        }
        let mut out = ModelVector::zeros(self.dim());
        self.add_sample_gradient(w, ue, sample, &mut out);
        Ok(out)
    }

    /// `grad f_n(w)`: the mean of the single-sample gradients.
    fn full_gradient(&self, w: &[f64], ue: usize) -> Result<ModelVector> {
        self.check_point(w)?;
        self.check_ue(ue)?;
        let m = self.samples(ue);
        let mut out = ModelVector::zeros(self.dim());
        for s in 0..m {
            self.add_sample_gradient(w, ue, s, &mut out);
        }
        for x in out.iter_mut() {
            *x /= m as f64;
        }
        Ok(out)
    }

    /// `grad f(w)`: the mean of the local full gradients.
    fn global_gradient(&self, w: &[f64]) -> Result<ModelVector> {
        let n = self.n_ues();
        let mut out = ModelVector::zeros(self.dim());
        for ue in 0..n {
            out.axpy(1.0, &self.full_gradient(w, ue)?);
        }
        for x in out.iter_mut() {
            *x /= n as f64;
        }
        Ok(out)
    }

    /// Largest single-sample gradient norm at `w` over every UE and sample.
    fn max_sample_gradient_norm(&self, w: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.dim()];
        let mut best = 0.0f64;
        for ue in 0..self.n_ues() {
            for s in 0..self.samples(ue) {
                buf.fill(0.0);
                self.add_sample_gradient(w, ue, s, &mut buf);
                best = best.max(crate::vector::dot(&buf, &buf).sqrt());
            }
        }
        best
    }

    fn check_ue(&self, ue: usize) -> Result<()> {
        if ue >= self.n_ues() {
            return Err(Error::IndexOutOfRange { what: "ue", index: ue, limit: self.n_ues() });
        }
        Ok(())
    }

    fn check_point(&self, w: &[f64]) -> Result<()> {
        check_dim(self.dim(), w.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskFamily {
    Quadratic,
    Logistic,
}

impl FromStr for TaskFamily {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "quadratic" => Ok(TaskFamily::Quadratic),
            "logistic" => Ok(TaskFamily::Logistic),
            other => Err(format!("unknown task family `{other}` (quadratic|logistic)")),
        }
    }
}

impl fmt::Display for TaskFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskFamily::Quadratic => "quadratic",
            TaskFamily::Logistic => "logistic",
        })
    }
}

/// Either task family behind one type.
#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Quadratic(QuadraticTask),
    Logistic(LogisticTask),
}

impl Task {
    pub fn family(&self) -> TaskFamily {
        match self {
            Task::Quadratic(_) => TaskFamily::Quadratic,
            Task::Logistic(_) => TaskFamily::Logistic,
        }
    }

    fn inner(&self) -> &dyn Objective {
        match self {
            Task::Quadratic(t) => t,
            Task::Logistic(t) => t,
        }
    }
}

impl Objective for Task {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn n_ues(&self) -> usize {
        self.inner().n_ues()
    }
    fn samples(&self, ue: usize) -> usize {
        self.inner().samples(ue)
    }
    #[inline]
    fn add_sample_gradient(&self, w: &[f64], ue: usize, sample: usize, out: &mut [f64]) {
        match self {
            Task::Quadratic(t) => t.add_sample_gradient(w, ue, sample, out),
            Task::Logistic(t) => t.add_sample_gradient(w, ue, sample, out),
        }
    }
    fn local_loss(&self, w: &[f64], ue: usize) -> f64 {
        self.inner().local_loss(w, ue)
    }
    fn w_star(&self) -> &ModelVector {
        match self {
            Task::Quadratic(t) => t.w_star(),
            Task::Logistic(t) => t.w_star(),
        }
    }
    fn hessian(&self, w: &[f64]) -> DMatrix<f64> {
        self.inner().hessian(w)
    }
    fn local_hessian(&self, w: &[f64], ue: usize) -> DMatrix<f64> {
        self.inner().local_hessian(w, ue)
    }
    fn curvature(&self) -> (f64, f64) {
        self.inner().curvature()
    }
    fn loss(&self, w: &[f64]) -> f64 {
        self.inner().loss(w)
    }
}

/// Row-major sample matrix with one target per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalData {
    pub(crate) d: usize,
    pub(crate) rows: Vec<f64>,
    pub(crate) targets: Vec<f64>,
}

impl LocalData {
    pub fn new(d: usize, rows: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        if d == 0 || targets.is_empty() {
            return Err(Error::invalid("local data", "needs d >= 1 and at least one sample"));
        }
        check_dim(targets.len() * d, rows.len())?;
        Ok(LocalData { d, rows, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }

    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    /// `X^T diag(weights) X / m`.
    pub(crate) fn weighted_gram(&self, weights: impl Fn(usize) -> f64) -> DMatrix<f64> {
        let d = self.d;
        let mut g = DMatrix::zeros(d, d);
        for i in 0..self.len() {
            let r = self.row(i);
            let wgt = weights(i);
            for a in 0..d {
                let ra = wgt * r[a];
                for b in a..d {
                    g[(a, b)] += ra * r[b];
                }
            }
        }
        let m = self.len() as f64;
        for a in 0..d {
            for b in a..d {
                g[(a, b)] /= m;
                g[(b, a)] = g[(a, b)];
            }
        }
        g
    }
}

pub(crate) fn symmetric_extremes(h: &DMatrix<f64>) -> (f64, f64) {
    let eig = h.clone().symmetric_eigenvalues();
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}
