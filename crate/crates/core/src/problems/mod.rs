//! Desk-scale objectives with hand-written gradients, plus data sharding.

mod dataset;
mod logistic;
mod mlp;
mod quadratic;
mod shard;

use std::path::PathBuf;
use std::sync::Arc;

pub use dataset::{load_csv, make_two_gaussians, Dataset};
pub use logistic::LogisticProblem;
pub use mlp::{MlpLoss, TinyMlpProblem};
pub use quadratic::{make_quadratic, quadratic_spectrum, QuadraticProblem};
pub use shard::{shard, DataShard};

use crate::error::Result;
use crate::numeric::{DenseMatrix, Evaluation, GradientOracle, ParamVector, Rng};

/// Where a classification dataset comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    TwoGaussians { n: usize, d: usize, separation: f64, seed: u64 },
    Csv(PathBuf),
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::TwoGaussians { n, d, separation, seed } => make_two_gaussians(*n, *d, *separation, *seed),
            DataSource::Csv(path) => load_csv(path),
        }
    }
}

/// Serializable description of an objective; [`ProblemSpec::build`] turns it
/// into a [`Problem`].
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Quadratic { dim: usize, condition_number: f64, noise_sigma: f64, seed: u64 },
    ScalarQuadratic { h: f64, b: f64, noise_sigma: f64 },
    Logistic { source: DataSource, l2: f64 },
    Mlp { source: DataSource, hidden: usize, loss: MlpLoss, init_seed: u64 },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Problem> {
        Ok(match self {
            ProblemSpec::Quadratic { dim, condition_number, noise_sigma, seed } => {
                Problem::Quadratic(make_quadratic(*dim, *condition_number, *noise_sigma, *seed)?)
            }
            ProblemSpec::ScalarQuadratic { h, b, noise_sigma } => {
                Problem::Quadratic(QuadraticProblem::scalar(*h, *b, *noise_sigma)?)
            }
            ProblemSpec::Logistic { source, l2 } => Problem::Logistic(LogisticProblem::new(source.load()?, *l2)?),
            ProblemSpec::Mlp { source, hidden, loss, init_seed } => {
                Problem::Mlp(TinyMlpProblem::new(source.load()?, *hidden, *loss)?, *init_seed)
            }
        })
    }

    pub fn build_shared(&self) -> Result<Arc<dyn GradientOracle>> {
        Ok(Arc::new(self.build()?))
    }
}

/// Any of the built-in objectives.
#[derive(Debug, Clone)]
pub enum Problem {
    Quadratic(QuadraticProblem),
    Logistic(LogisticProblem),
    /// MLP plus the seed of its weight initialization.
    Mlp(TinyMlpProblem, u64),
}

impl Problem {
    fn oracle(&self) -> &dyn GradientOracle {
        match self {
            Problem::Quadratic(q) => q,
            Problem::Logistic(l) => l,
            Problem::Mlp(m, _) => m,
        }
    }
}

impl GradientOracle for Problem {
    fn dim(&self) -> usize {
        self.oracle().dim()
    }

    fn num_samples(&self) -> usize {
        self.oracle().num_samples()
    }

    fn loss(&self, x: &ParamVector, minibatch: &[usize]) -> Result<f64> {
        self.oracle().loss(x, minibatch)
    }

    fn eval(&self, x: &ParamVector, minibatch: &[usize], noise: &mut Rng) -> Result<Evaluation> {
        self.oracle().eval(x, minibatch, noise)
    }

    fn exact_loss(&self, x: &ParamVector) -> Result<f64> {
        self.oracle().exact_loss(x)
    }

    fn optimum(&self) -> Option<&ParamVector> {
        self.oracle().optimum()
    }

    fn quadratic_terms(&self) -> Option<(&DenseMatrix, &ParamVector)> {
        self.oracle().quadratic_terms()
    }

    fn initial_point(&self, _seed: u64) -> ParamVector {
        match self {
            Problem::Mlp(m, init_seed) => m.init_params(*init_seed),
            other => ParamVector::zeros(other.dim()),
        }
    }
}
