use crate::error::{check_dims, Result};
use crate::numeric::{GradientOracle, ParamVector, Rng};
use crate::problems::DataShard;

/// Local variable, momentum buffer, step counter, shard and private generator
/// of one worker. The generator draws minibatch indices first and gradient
/// noise second on every gradient evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerState {
    pub x: ParamVector,
    pub v: ParamVector,
    pub t: u64,
    pub shard: DataShard,
    pub rng: Rng,
    pub batch_size: usize,
}

impl WorkerState {
    pub fn new(x: ParamVector, shard: DataShard, rng: Rng, batch_size: usize) -> Self {
        let v = ParamVector::zeros(x.dim());
        WorkerState { x, v, t: 0, shard, rng, batch_size }
    }

    pub fn id(&self) -> usize {
        self.shard.worker
    }

    /// Stochastic gradient at `at`, consuming this worker's generator.
    pub fn gradient(&mut self, oracle: &dyn GradientOracle, at: &ParamVector) -> Result<ParamVector> {
        check_dims(oracle.dim(), at.dim())?;
        let batch = self.shard.sample(self.batch_size, &mut self.rng);
        Ok(oracle.eval(at, &batch, &mut self.rng)?.grad)
    }
}

/// The center variable and the number of elastic updates applied to it.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterState {
    pub x_tilde: ParamVector,
    pub version: u64,
}

impl CenterState {
    pub fn new(x_tilde: ParamVector) -> Self {
        CenterState { x_tilde, version: 0 }
    }
}

/// Primal variable and scaled dual of one worker in scalar consensus ADMM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmWorkerState {
    pub x: f64,
    pub lambda: f64,
}
