use std::fmt::Debug;

use crate::error::Result;
use crate::numeric::{DenseMatrix, ParamVector, Rng};

/// Loss and gradient at one point for one minibatch.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub grad: ParamVector,
}

/// Stochastic gradient source used by every optimizer kernel.
///
/// `eval` is deterministic given `(x, minibatch)` and the state of `noise`.
/// Objectives without additive gradient noise leave `noise` untouched. An
/// empty minibatch means the full dataset, and population objectives (the
/// quadratics) ignore the minibatch entirely.
pub trait GradientOracle: Debug + Send + Sync {
    fn dim(&self) -> usize;

    /// Number of data samples; zero for population objectives.
    fn num_samples(&self) -> usize {
        0
    }

    /// Minibatch loss without gradient noise.
    fn loss(&self, x: &ParamVector, minibatch: &[usize]) -> Result<f64>;

    fn eval(&self, x: &ParamVector, minibatch: &[usize], noise: &mut Rng) -> Result<Evaluation>;

    /// Full-data objective.
    fn exact_loss(&self, x: &ParamVector) -> Result<f64> {
        self.loss(x, &[])
    }

    /// Known minimizer, when the objective has a closed-form one.
    fn optimum(&self) -> Option<&ParamVector> {
        None
    }

    /// `(H, b)` when the objective is the quadratic `1/2 x^T H x - b^T x`.
    fn quadratic_terms(&self) -> Option<(&DenseMatrix, &ParamVector)> {
        None
    }

    /// Starting point shared by the center and every worker.
    fn initial_point(&self, _seed: u64) -> ParamVector {
        ParamVector::zeros(self.dim())
    }
}
