//! Exact linear round maps of the algorithms on `f(x) = h x^2 / 2`, their
//! spectral radii over parameter grids, and stationary variances under
//! gradient noise.

mod roundmap;
mod scan;
mod variance;

pub use roundmap::{build_round_map, LinearMap, MapAlgorithm, RoundMapSpec, EIGEN_TOL};
pub use scan::{
    cell_spec, compare_easgd_admm, grid_axis, is_stable, parse_grid_csv, scan_stability, scan_stability_with,
    sync_boundary_scan, BoundaryReport, ComparisonReport, DifferingCell, GridRow, StabilityGrid, GRID_HEADER,
    STABLE_MARGIN,
};
pub use variance::{stationary_covariance, stationary_variance};

use std::sync::Arc;

use crate::algorithms::HyperParams;
use crate::error::{Error, Result};
use crate::numeric::ParamVector;
use crate::problems::QuadraticProblem;
use crate::sim::{Schedule, ScheduleKind, SimConfig};

/// Simulator configuration whose noisy trajectory, sampled every
/// [`RoundMapSpec::steps_per_round`] local steps, follows the round map of
/// `spec` from the stacked `state`. ADMM duals in `state` must be zero.
pub fn simulator_config(spec: &RoundMapSpec, state: &[f64], rounds: u64, sigma: f64, seed: u64) -> Result<SimConfig> {
    spec.validate()?;
    if state.len() != spec.state_dim() {
        return Err(Error::Dimension { expected: spec.state_dim(), got: state.len() });
    }
    let p = spec.p;
    let problem = Arc::new(QuadraticProblem::scalar(spec.h, 0.0, sigma)?);
    let eta = if spec.algorithm == MapAlgorithm::AdmmRr { 1.0 } else { spec.eta };
    let mut hp = HyperParams::new(eta, spec.rho, spec.tau, p, spec.delta)?;
    hp.comm_order = spec.comm_order;
    let kind = match spec.algorithm {
        MapAlgorithm::EasgdSync => ScheduleKind::Sync,
        _ => ScheduleKind::RoundRobin,
    };
    let mut cfg = SimConfig::new(
        spec.algorithm.sim_algorithm(),
        hp,
        problem,
        Schedule::new(kind),
        rounds * spec.steps_per_round(),
    );
    cfg.seed = seed;
    cfg.cadence = u64::MAX;
    let one = |v: f64| ParamVector::new(vec![v]);
    cfg.initial_workers = Some(state[..p].iter().map(|v| one(*v)).collect::<Result<_>>()?);
    match spec.algorithm {
        MapAlgorithm::EasgdSync | MapAlgorithm::EasgdRr => cfg.initial_center = Some(one(state[p])?),
        MapAlgorithm::AdmmRr => {
            if state[p + 1..].iter().any(|l| *l != 0.0) {
                return Err(Error::config("the simulator starts ADMM duals at zero"));
            }
            cfg.initial_center = Some(one(state[p])?);
        }
        MapAlgorithm::Msgd => {
            if state[1] != 0.0 {
                return Err(Error::config("the simulator starts momentum at zero"));
            }
        }
        MapAlgorithm::Sgd => {}
    }
    Ok(cfg)
}
