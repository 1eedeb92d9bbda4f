//! Deterministic single-process discrete-event simulation of p workers and
//! one center. Simulated time, not wall time, drives every schedule.

mod config;
mod engine;
mod events;
mod schedule;

pub use config::SimConfig;
pub use engine::{replay_check, run_sim, SimOutput, Simulator, DIVERGENCE_THRESHOLD};
pub use events::{events_to_text, parse_events, EventKind, SimEvent};
pub use schedule::{DurationLaw, Schedule, ScheduleKind};

use crate::error::Result;
use crate::numeric::ParamVector;

/// `(1/p) sum_i ||x_i - mean(x)||^2`.
pub fn disagreement(workers: &[&ParamVector]) -> Result<f64> {
    let mean = ParamVector::mean(workers)?;
    let mut total = 0.0;
    for x in workers {
        let d = x.distance(&mean)?;
        total += d * d;
    }
    Ok(total / workers.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(x: &[f64]) -> ParamVector {
        ParamVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn disagreement_examples() {
        let a = pv(&[1.5, -2.0]);
        assert_eq!(disagreement(&[&a, &a, &a]).unwrap(), 0.0);
        assert_eq!(disagreement(&[&pv(&[0.0]), &pv(&[2.0])]).unwrap(), 1.0);
        let xs = [pv(&[0.3, 1.0]), pv(&[-1.2, 0.5]), pv(&[2.0, 2.0])];
        let scaled: Vec<ParamVector> = xs.iter().map(|x| x.scale(3.0).unwrap()).collect();
        let d1 = disagreement(&xs.iter().collect::<Vec<_>>()).unwrap();
        let d9 = disagreement(&scaled.iter().collect::<Vec<_>>()).unwrap();
        assert!((d9 - 9.0 * d1).abs() < 1e-12);
    }
}
