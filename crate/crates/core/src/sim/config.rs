use std::sync::Arc;

use crate::algorithms::{Algorithm, HyperParams};
use crate::error::{check_dims, Error, Result};
use crate::numeric::{GradientOracle, ParamVector};
use crate::sim::{Schedule, ScheduleKind};

/// Everything a simulation needs. Two runs of the same config are bit-identical.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub algorithm: Algorithm,
    pub hp: HyperParams,
    pub problem: Arc<dyn GradientOracle>,
    pub schedule: Schedule,
    /// Local steps per worker (rounds for the synchronous schedule).
    pub steps: u64,
    /// Metrics are recorded whenever the center version reaches a multiple of this.
    pub cadence: u64,
    /// Seeds worker generators (`seed ^ worker`), shards and the default start point.
    pub seed: u64,
    pub batch_size: usize,
    /// Center start; defaults to the problem's initial point.
    pub initial_center: Option<ParamVector>,
    /// Per-worker start; defaults to the center start.
    pub initial_workers: Option<Vec<ParamVector>>,
    /// Keep a copy of the center at every metrics row.
    pub record_snapshots: bool,
}

impl SimConfig {
    pub fn new(
        algorithm: Algorithm,
        hp: HyperParams,
        problem: Arc<dyn GradientOracle>,
        schedule: Schedule,
        steps: u64,
    ) -> Self {
        SimConfig {
            algorithm,
            hp,
            problem,
            schedule,
            steps,
            cadence: 1,
            seed: 0,
            batch_size: 1,
            initial_center: None,
            initial_workers: None,
            record_snapshots: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.hp.validate()?;
        self.schedule.validate(self.hp.p)?;
        if self.cadence == 0 {
            return Err(Error::config("cadence must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        let dim = self.problem.dim();
        if let Some(c) = &self.initial_center {
            check_dims(dim, c.dim())?;
        }
        if let Some(ws) = &self.initial_workers {
            if ws.len() != self.hp.p {
                return Err(Error::config(format!("{} initial workers for p = {}", ws.len(), self.hp.p)));
            }
            for w in ws {
                check_dims(dim, w.dim())?;
            }
        }
        let n = self.problem.num_samples();
        if n > 0 && n < self.hp.p {
            return Err(Error::config(format!("{n} samples cannot be sharded over {} workers", self.hp.p)));
        }
        use Algorithm::*;
        use ScheduleKind::*;
        let ok = match self.algorithm {
            EasgdSync => self.schedule.kind == Sync,
            EasgdAsync | Eamsgd | Downpour => self.schedule.kind != Sync,
            AdmmRoundRobin => self.schedule.kind == RoundRobin,
            Sgd | Msgd => true,
        };
        if !ok {
            return Err(Error::config(format!(
                "algorithm {} cannot run under the {} schedule",
                self.algorithm.as_str(),
                self.schedule.kind.as_str()
            )));
        }
        if self.algorithm == AdmmRoundRobin {
            self.admm_curvature()?;
        }
        Ok(())
    }

    /// `h` of the scalar quadratic `h x^2 / 2` that ADMM is specialised to.
    pub(crate) fn admm_curvature(&self) -> Result<f64> {
        match self.problem.quadratic_terms() {
            Some((h, b)) if h.rows() == 1 && b[0] == 0.0 => Ok(h[(0, 0)]),
            _ => Err(Error::config("admm_rr needs a one-dimensional quadratic with b = 0")),
        }
    }
}
