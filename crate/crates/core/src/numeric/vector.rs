use std::ops::Index;

use crate::error::{check_dims, Error, Result};

/// Dense vector of `f64` holding a worker variable, the center variable or a
/// momentum buffer. Entries are finite after every public constructor.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    data: Vec<f64>,
}

impl ParamVector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::config("vector dimension must be positive"));
        }
        let v = ParamVector { data };
        v.ensure_finite()?;
        Ok(v)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "vector dimension must be positive");
        ParamVector { data: vec![0.0; dim] }
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        assert!(dim > 0 && value.is_finite());
        ParamVector { data: vec![value; dim] }
    }

    /// Builds a vector without the finiteness scan. Callers must follow with
    /// [`ParamVector::ensure_finite`] before the value escapes a public API.
    pub(crate) fn from_raw(data: Vec<f64>) -> Self {
        ParamVector { data }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn ensure_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::numerics(format!("non-finite entry {} at index {i}", self.data[i]))),
        }
    }

    pub fn dot(&self, other: &ParamVector) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &ParamVector) -> Result<ParamVector> {
        check_dims(self.dim(), other.dim())?;
        let out = ParamVector::from_raw(self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect());
        out.ensure_finite()?;
        Ok(out)
    }

    pub fn add(&self, other: &ParamVector) -> Result<ParamVector> {
        check_dims(self.dim(), other.dim())?;
        let out = ParamVector::from_raw(self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect());
        out.ensure_finite()?;
        Ok(out)
    }

    pub fn scale(&self, a: f64) -> Result<ParamVector> {
        let out = ParamVector::from_raw(self.data.iter().map(|v| a * v).collect());
        out.ensure_finite()?;
        Ok(out)
    }

    pub fn distance(&self, other: &ParamVector) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    /// Arithmetic mean of a non-empty set of equal-dimension vectors.
    pub fn mean(vectors: &[&ParamVector]) -> Result<ParamVector> {
        let first = vectors.first().ok_or_else(|| Error::config("mean of zero vectors"))?;
        let mut acc = vec![0.0; first.dim()];
        for v in vectors {
            check_dims(first.dim(), v.dim())?;
            for (a, x) in acc.iter_mut().zip(&v.data) {
                *a += x;
            }
        }
        let n = vectors.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        let out = ParamVector::from_raw(acc);
        out.ensure_finite()?;
        Ok(out)
    }
}

impl Index<usize> for ParamVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

/// `a * x + y`, leaving both inputs untouched.
pub fn axpy(a: f64, x: &ParamVector, y: &ParamVector) -> Result<ParamVector> {
    if !a.is_finite() {
        return Err(Error::numerics(format!("axpy scalar {a} is not finite")));
    }
    check_dims(x.dim(), y.dim())?;
    let out = ParamVector::from_raw(x.data.iter().zip(&y.data).map(|(xi, yi)| a * xi + yi).collect());
    out.ensure_finite()?;
    Ok(out)
}
