//! Optimizer kernels. All statefulness lives in the explicit state records.

mod admm;
mod hyper;
mod kernels;
mod state;

pub use admm::admm_roundrobin_step;
pub use hyper::{CommOrder, HyperParams};
pub use kernels::{
    center_apply_elastic, center_moving_average_form, center_sum_form, downpour_adopt_center, downpour_worker_step,
    eamsgd_worker_step, easgd_async_worker_step, easgd_sync_round, elastic_difference, msgd_step, sgd_step,
    sgd_worker_step, DownpourStep,
};
pub use state::{AdmmWorkerState, CenterState, WorkerState};

/// Optimizer selector shared by the simulator, the network runtime and configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    EasgdSync,
    EasgdAsync,
    Eamsgd,
    Downpour,
    Sgd,
    Msgd,
    AdmmRoundRobin,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::EasgdSync,
        Algorithm::EasgdAsync,
        Algorithm::Eamsgd,
        Algorithm::Downpour,
        Algorithm::Sgd,
        Algorithm::Msgd,
        Algorithm::AdmmRoundRobin,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::EasgdSync => "easgd_sync",
            Algorithm::EasgdAsync => "easgd_async",
            Algorithm::Eamsgd => "eamsgd",
            Algorithm::Downpour => "downpour",
            Algorithm::Sgd => "sgd",
            Algorithm::Msgd => "msgd",
            Algorithm::AdmmRoundRobin => "admm_rr",
        }
    }

    pub fn parse(s: &str) -> crate::Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| crate::Error::Config(format!("unknown algorithm {s:?}")))
    }

    /// Whether the workers exchange with a center variable.
    pub fn has_center(&self) -> bool {
        !matches!(self, Algorithm::Sgd | Algorithm::Msgd)
    }
}
