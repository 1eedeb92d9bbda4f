#![allow(dead_code)]

use std::path::PathBuf;

use elastic_opt::algorithms::CommOrder;
use elastic_opt::cli::ExperimentConfig;
use elastic_opt::numeric::Rng;
use elastic_opt::sim::{events_to_text, run_sim, SimOutput, Simulator};
use elastic_opt::stability::{
    build_round_map, grid_axis, scan_stability, simulator_config, MapAlgorithm, RoundMapSpec,
};

/// Runs a `mode=sim` config given as key=value text.
pub fn sim(text: &str) -> SimOutput {
    let cfg = ExperimentConfig::parse(text).unwrap();
    run_sim(cfg.sim_config().unwrap()).unwrap()
}

/// Simulator steps that make up one round of the linear map.
pub fn steps_per_round(spec: &RoundMapSpec) -> usize {
    match spec.algorithm {
        MapAlgorithm::EasgdSync => 1,
        _ => spec.p * spec.steps_per_round() as usize,
    }
}

/// Mean of the squared stacked state over `rounds` simulated rounds after
/// `burn_in` rounds, started from the origin with gradient noise `sigma`.
pub fn empirical_second_moment(spec: &RoundMapSpec, sigma: f64, burn_in: u64, rounds: u64, seed: u64) -> Vec<f64> {
    let state = vec![0.0; spec.state_dim()];
    let cfg = simulator_config(spec, &state, burn_in + rounds, sigma, seed).unwrap();
    let mut sim = Simulator::new(cfg).unwrap();
    let per_round = steps_per_round(spec);
    sim.advance(burn_in as usize * per_round).unwrap();
    let mut sums = vec![0.0; spec.state_dim()];
    for _ in 0..rounds {
        sim.advance(per_round).unwrap();
        for (s, x) in sums.iter_mut().zip(sim.stacked_state()) {
            *s += x * x;
        }
    }
    sums.iter().map(|s| s / rounds as f64).collect()
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Random spec whose round map has radius below one.
pub fn random_stable_spec(alg: MapAlgorithm, rng: &mut Rng) -> RoundMapSpec {
    loop {
        let p = if matches!(alg, MapAlgorithm::Sgd | MapAlgorithm::Msgd) { 1 } else { 1 + rng.below(4) };
        let h = rng.uniform_range(0.5, 2.0);
        let eta = rng.uniform_range(0.01, 1.0) / h;
        let alpha = rng.uniform_range(0.0, 0.9 / p as f64);
        let mut spec = RoundMapSpec::new(alg, p, h, eta, alpha / eta);
        if alg == MapAlgorithm::AdmmRr {
            spec.rho = rng.uniform_range(0.05, 5.0);
        }
        if alg == MapAlgorithm::Msgd {
            spec.delta = rng.uniform_range(0.0, 0.95);
        }
        if alg == MapAlgorithm::EasgdRr {
            spec.tau = 1 + rng.below(3) as u64;
            spec.comm_order = [CommOrder::Before, CommOrder::After, CommOrder::Concurrent][rng.below(3)];
        }
        if build_round_map(&spec).unwrap().spectral_radius().unwrap() < 1.0 {
            return spec;
        }
    }
}

pub fn initial_state(spec: &RoundMapSpec, rng: &mut Rng) -> Vec<f64> {
    let mut s: Vec<f64> = (0..spec.state_dim()).map(|_| rng.uniform_range(-2.0, 2.0)).collect();
    match spec.algorithm {
        MapAlgorithm::AdmmRr => s[spec.p + 1..].iter_mut().for_each(|l| *l = 0.0),
        MapAlgorithm::Msgd => s[1] = 0.0,
        _ => {}
    }
    s
}

pub const GOLDEN_GRID: &str = "stability_grid_easgd_sync_p2.csv";
pub const GOLDEN_EVENTS: &str = "events_easgd_async_p3.log";

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn golden_grid_csv() -> String {
    let grid = scan_stability(MapAlgorithm::EasgdSync, 2, &grid_axis(0.25, 1, 7), &grid_axis(0.2, 1, 4)).unwrap();
    grid.to_csv()
}

pub const EVENT_CONFIG: &str = "mode=sim
algorithm=easgd_async
p=3
eta=0.05
alpha=0.02
tau=3
dim=4
noise_sigma=0.3
schedule_law=exponential
step_costs=1,2,0.5
seed=11
steps=12
";

pub fn golden_event_log() -> String {
    let cfg = ExperimentConfig::parse(EVENT_CONFIG).unwrap();
    events_to_text(&run_sim(cfg.sim_config().unwrap()).unwrap().events)
}
