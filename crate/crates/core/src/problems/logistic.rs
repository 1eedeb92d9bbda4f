use crate::error::{check_dims, Error, Result};
use crate::numeric::{Evaluation, GradientOracle, ParamVector, Rng};
use crate::problems::Dataset;

/// L2-regularized logistic regression without intercept:
/// `mean_i log(1 + exp(-y_i w^T x_i)) + l2/2 ||w||^2` over the minibatch.
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    data: Dataset,
    l2: f64,
}

/// `log(1 + exp(z))` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Logistic sigmoid without overflow.
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn batch_indices(minibatch: &[usize], n: usize) -> Result<Box<dyn Iterator<Item = usize> + '_>> {
    if let Some(bad) = minibatch.iter().find(|i| **i >= n) {
        return Err(Error::config(format!("sample index {bad} out of range for {n} samples")));
    }
    Ok(if minibatch.is_empty() { Box::new(0..n) } else { Box::new(minibatch.iter().copied()) })
}

impl LogisticProblem {
    pub fn new(data: Dataset, l2: f64) -> Result<Self> {
        if !(l2 >= 0.0 && l2.is_finite()) {
            return Err(Error::config(format!("l2 must be nonnegative, got {l2}")));
        }
        if data.is_empty() {
            return Err(Error::config("empty dataset"));
        }
        Ok(LogisticProblem { data, l2 })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    /// Fraction of samples whose sign of `w^T x` matches the label (ties count as wrong).
    pub fn accuracy(&self, w: &ParamVector) -> Result<f64> {
        check_dims(self.data.dim(), w.dim())?;
        let correct = (0..self.data.len())
            .filter(|&i| {
                let m: f64 = self.data.row(i).iter().zip(w.as_slice()).map(|(a, b)| a * b).sum();
                m * self.data.labels[i] > 0.0
            })
            .count();
        Ok(correct as f64 / self.data.len() as f64)
    }

    fn loss_and_grad(&self, w: &ParamVector, minibatch: &[usize], want_grad: bool) -> Result<(f64, Vec<f64>)> {
        check_dims(self.data.dim(), w.dim())?;
        let mut loss = 0.0;
        let mut grad = vec![0.0; w.dim()];
        let mut count = 0usize;
        for i in batch_indices(minibatch, self.data.len())? {
            let x = self.data.row(i);
            let y = self.data.labels[i];
            let margin: f64 = y * x.iter().zip(w.as_slice()).map(|(a, b)| a * b).sum::<f64>();
            loss += softplus(-margin);
            if want_grad {
                let coeff = -y * sigmoid(-margin);
                grad.iter_mut().zip(x).for_each(|(g, xi)| *g += coeff * xi);
            }
            count += 1;
        }
        let inv = 1.0 / count as f64;
        let reg = 0.5 * self.l2 * w.as_slice().iter().map(|v| v * v).sum::<f64>();
        for (g, wi) in grad.iter_mut().zip(w.as_slice()) {
            *g = *g * inv + self.l2 * wi;
        }
        Ok((loss * inv + reg, grad))
    }
}

impl GradientOracle for LogisticProblem {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn num_samples(&self) -> usize {
        self.data.len()
    }

    fn loss(&self, x: &ParamVector, minibatch: &[usize]) -> Result<f64> {
        Ok(self.loss_and_grad(x, minibatch, false)?.0)
    }

    fn eval(&self, x: &ParamVector, minibatch: &[usize], _noise: &mut Rng) -> Result<Evaluation> {
        let (loss, grad) = self.loss_and_grad(x, minibatch, true)?;
        let grad = ParamVector::new(grad)?;
        Ok(Evaluation { loss, grad })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_two_gaussians;

    fn train(problem: &LogisticProblem, steps: usize, eta: f64) -> ParamVector {
        let mut w = ParamVector::zeros(problem.dim());
        let mut rng = Rng::new(0);
        for _ in 0..steps {
            let g = problem.eval(&w, &[], &mut rng).unwrap().grad;
            w = crate::numeric::axpy(-eta, &g, &w).unwrap();
        }
        w
    }

    #[test]
    fn separable_data_is_learned() {
        let p = LogisticProblem::new(make_two_gaussians(400, 2, 10.0, 3).unwrap(), 1e-4).unwrap();
        let w = train(&p, 200, 0.5);
        assert!(p.accuracy(&w).unwrap() >= 0.99);
    }

    #[test]
    fn overlapping_classes_stay_near_chance() {
        let train_set = LogisticProblem::new(make_two_gaussians(10_000, 2, 0.0, 21).unwrap(), 1e-3).unwrap();
        let test_set = LogisticProblem::new(make_two_gaussians(10_000, 2, 0.0, 22).unwrap(), 1e-3).unwrap();
        let w = train(&train_set, 100, 0.5);
        let acc = test_set.accuracy(&w).unwrap();
        assert!((acc - 0.5).abs() <= 0.05, "accuracy {acc}");
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0 && softplus(-1000.0) < 1e-300);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_index() {
        let p = LogisticProblem::new(make_two_gaussians(4, 1, 1.0, 0).unwrap(), 0.0).unwrap();
        assert!(p.loss(&ParamVector::zeros(1), &[4]).is_err());
    }
}
