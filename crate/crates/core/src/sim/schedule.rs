use crate::error::{Error, Result};
use crate::numeric::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    /// All workers step together; a round lasts as long as its slowest step.
    Sync,
    /// One worker at a time in index order `0..p` cyclically; simulated time
    /// advances by each step's duration.
    RoundRobin,
    /// Workers run concurrently on private clocks; the earliest completion
    /// goes next, ties broken by lowest worker id.
    AsyncRandom,
}

impl ScheduleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScheduleKind::Sync => "sync",
            ScheduleKind::RoundRobin => "round_robin",
            ScheduleKind::AsyncRandom => "async_random",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sync" => Ok(ScheduleKind::Sync),
            "round_robin" => Ok(ScheduleKind::RoundRobin),
            "async_random" => Ok(ScheduleKind::AsyncRandom),
            other => Err(Error::config(format!("schedule must be sync|round_robin|async_random, got {other:?}"))),
        }
    }
}

/// Law of a single local-step duration with per-worker mean `c_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DurationLaw {
    Fixed,
    Exponential,
}

impl DurationLaw {
    pub fn as_str(&self) -> &'static str {
        match self {
            DurationLaw::Fixed => "fixed",
            DurationLaw::Exponential => "exponential",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(DurationLaw::Fixed),
            "exponential" => Ok(DurationLaw::Exponential),
            other => Err(Error::config(format!("schedule law must be fixed|exponential, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub law: DurationLaw,
    /// One mean cost per worker, or a single value shared by all.
    pub costs: Vec<f64>,
    pub seed: u64,
}

impl Schedule {
    pub fn new(kind: ScheduleKind) -> Self {
        Schedule { kind, law: DurationLaw::Fixed, costs: vec![1.0], seed: 0 }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.costs.len() != 1 && self.costs.len() != p {
            return Err(Error::config(format!("schedule needs 1 or {p} step costs, got {}", self.costs.len())));
        }
        if let Some(c) = self.costs.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(Error::config(format!("step costs must be positive, got {c}")));
        }
        Ok(())
    }

    pub fn mean_cost(&self, worker: usize) -> f64 {
        if self.costs.len() == 1 {
            self.costs[0]
        } else {
            self.costs[worker]
        }
    }

    /// Duration of the next step of `worker`. Fixed laws never touch `rng`.
    pub fn sample(&self, worker: usize, rng: &mut Rng) -> f64 {
        let c = self.mean_cost(worker);
        match self.law {
            DurationLaw::Fixed => c,
            DurationLaw::Exponential => rng.exponential(c),
        }
    }
}
