use std::ops::{Deref, DerefMut};

use crate::error::{check_dim, Result};

/// Dense parameter or gradient vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelVector(Vec<f64>);

impl ModelVector {
    pub fn zeros(d: usize) -> Self {
        ModelVector(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &[f64]) {
        debug_assert_eq!(self.0.len(), x.len());
        for (s, xi) in self.0.iter_mut().zip(x) {
            *s += a * xi;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for s in &mut self.0 {
            *s *= a;
        }
    }

    pub fn fill(&mut self, v: f64) {
        self.0.iter_mut().for_each(|s| *s = v);
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn norm2_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    pub fn norm2(&self) -> f64 {
        self.norm2_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// `self - other`, checked.
    pub fn sub(&self, other: &ModelVector) -> Result<ModelVector> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// Exact arithmetic mean of equally sized vectors.
    pub fn mean_of<'a, I>(vectors: I, d: usize) -> ModelVector
    where
        I: IntoIterator<Item = &'a ModelVector>,
    {
        let mut acc = ModelVector::zeros(d);
        let mut n = 0usize;
        for v in vectors {
            acc.axpy(1.0, v);
            n += 1;
        }
        if n > 0 {
            for s in &mut acc.0 {
                *s /= n as f64;
            }
        }
        acc
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Deref for ModelVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ModelVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ModelVector {
    fn from(v: Vec<f64>) -> Self {
        ModelVector(v)
    }
}

impl From<&[f64]> for ModelVector {
    fn from(v: &[f64]) -> Self {
        ModelVector(v.to_vec())
    }
}

impl FromIterator<f64> for ModelVector {
    fn from_iter<T: IntoIterator<Item = f64>>(iter: T) -> Self {
        ModelVector(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axpy_and_norms() {
        let mut v = ModelVector::from(vec![3.0, 0.0]);
        v.axpy(2.0, &[0.0, 2.0]);
        assert_eq!(v.as_slice(), &[3.0, 4.0]);
        assert_eq!(v.norm2(), 5.0);
        assert_eq!(v.max_abs(), 4.0);
    }

    #[test]
    fn mean_is_exact_for_two() {
        let a = ModelVector::from(vec![1.0, 2.0]);
        let b = ModelVector::from(vec![3.0, -2.0]);
        let m = ModelVector::mean_of([&a, &b], 2);
        assert_eq!(m.as_slice(), &[2.0, 0.0]);
    }

    #[test]
    fn sub_checks_dimension() {
        let a = ModelVector::zeros(2);
        let b = ModelVector::zeros(3);
        assert!(a.sub(&b).is_err());
    }
}
