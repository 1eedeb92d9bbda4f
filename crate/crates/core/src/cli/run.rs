use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::cli::config::{ExperimentConfig, Mode};
use crate::cli::speedup::speedup_run;
use crate::error::{Error, Result};
use crate::metrics::write_metrics;
use crate::net::{run_worker, serve_center, CenterConfig, WorkerConfig};
use crate::numeric::ParamVector;
use crate::sim::{events_to_text, parse_events, run_sim, SimOutput};
use crate::stability::{compare_easgd_admm, scan_stability_with, stationary_variance, RoundMapSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_TIMEOUT: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Parse { .. } | Error::Dimension { .. } => EXIT_VALIDATION,
        Error::Diverged { .. } => EXIT_DIVERGED,
        Error::Timeout(_) => EXIT_TIMEOUT,
        _ => EXIT_OTHER,
    }
}

/// `(1/K) sum x~^k` over the snapshots that remain after dropping the first
/// `floor(burn_in * K)`; at least the last snapshot is always kept.
pub fn averaged_iterate(snapshots: &[ParamVector], burn_in: f64) -> Result<ParamVector> {
    if snapshots.is_empty() {
        return Err(Error::config("averaged iterate needs at least one snapshot"));
    }
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Error::config(format!("burn_in must lie in [0, 1), got {burn_in}")));
    }
    let k = snapshots.len();
    let skip = ((burn_in * k as f64).floor() as usize).min(k - 1);
    let kept: Vec<&ParamVector> = snapshots[skip..].iter().collect();
    ParamVector::mean(&kept)
}

fn vector_line(label: &str, index: i64, v: &[f64]) -> String {
    let mut line = format!("{label},{index}");
    for x in v {
        let _ = write!(line, ",{x}");
    }
    line.push('\n');
    line
}

/// Writes `resolved_config` into `dir`, creating it.
pub fn write_resolved(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("resolved_config"), cfg.to_text())?;
    Ok(())
}

/// Runs the configured mode and returns the paths it wrote.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    match cfg.mode()? {
        Mode::Sim => run_sim_mode(cfg),
        Mode::Stability => run_stability_mode(cfg),
        Mode::NetCenter => run_center_mode(cfg),
        Mode::NetWorker => run_worker_mode(cfg),
        Mode::Speedup => speedup_run(cfg),
    }
}

fn run_sim_mode(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = cfg.output_dir();
    write_resolved(cfg, &dir)?;
    let out: SimOutput = run_sim(cfg.sim_config()?)?;
    let metrics = dir.join("metrics.csv");
    write_metrics(&metrics, &out.metrics)?;
    let events = dir.join("events.log");
    fs::write(&events, events_to_text(&out.events))?;
    if parse_events(&fs::read_to_string(&events)?)?.len() != out.events.len() {
        return Err(Error::Parse { line: 0, message: "event log did not read back".into() });
    }
    let state = dir.join("final_state.csv");
    let mut text = vector_line("center", -1, out.center.x_tilde.as_slice());
    for (i, w) in out.workers.iter().enumerate() {
        text.push_str(&vector_line("worker", i as i64, w.x.as_slice()));
    }
    fs::write(&state, text)?;
    let averaged = dir.join("averaged_iterate.csv");
    let avg = averaged_iterate(&out.center_snapshots, cfg.num("burn_in")?)?;
    fs::write(&averaged, vector_line("averaged", -1, avg.as_slice()))?;
    Ok(vec![dir.join("resolved_config"), metrics, events, state, averaged])
}

fn run_stability_mode(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = cfg.output_dir();
    write_resolved(cfg, &dir)?;
    let (eta_h, alpha) = cfg.grid_axes()?;
    let mut base = RoundMapSpec::new(cfg.map_algorithm()?, cfg.num("p")?, 1.0, cfg.num("eta")?, cfg.num("rho")?);
    base.delta = cfg.num("delta")?;
    base.comm_order = cfg.hyper_params()?.comm_order;
    let grid = scan_stability_with(&base, &eta_h, &alpha)?;
    let grid_path = dir.join("stability_grid.csv");
    grid.write_csv(&grid_path)?;
    let mut written = vec![dir.join("resolved_config"), grid_path];
    if cfg.flag("compare_admm")? {
        let report = compare_easgd_admm(base.p, &eta_h, &alpha)?;
        let admm = dir.join("stability_grid_admm_rr.csv");
        report.admm.write_csv(&admm)?;
        let text = dir.join("comparison.txt");
        fs::write(&text, report.to_text())?;
        written.extend([admm, text]);
    }
    if let Some(sigma) = cfg.opt_num::<f64>("variance_sigma")? {
        let mut spec = base;
        spec.h = cfg.num("h")?;
        spec.eta = cfg.num("eta")?;
        spec.rho = cfg.num("rho")?;
        let var = stationary_variance(&spec, sigma)?;
        let path = dir.join("stationary_variance.csv");
        let mut text = String::from("coordinate,variance\n");
        for (i, v) in var.iter().enumerate() {
            let _ = writeln!(text, "{i},{v}");
        }
        fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}

fn run_center_mode(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = cfg.output_dir();
    write_resolved(cfg, &dir)?;
    let problem = cfg.problem_spec()?.build_shared()?;
    let initial = problem.initial_point(cfg.num("seed")?);
    let metrics = dir.join("center_metrics.csv");
    let mut center = CenterConfig::new(cfg.get("bind"), initial, cfg.num("workers")?);
    center.objective = Some(problem);
    center.stop_threshold = cfg.opt_num("stop_threshold")?;
    center.poll_interval = cfg.duration_ms("poll_interval_ms")?;
    center.metrics_path = Some(metrics.clone());
    let report = serve_center(center)?;
    log::info!("center stopped at version {} after {} pushes", report.center.version, report.pushes);
    let state = dir.join("center_state.csv");
    fs::write(&state, vector_line("center", -1, report.center.x_tilde.as_slice()))?;
    Ok(vec![dir.join("resolved_config"), metrics, state])
}

/// Directory of worker `id` under `output_dir`.
pub fn worker_dir(cfg: &ExperimentConfig, id: usize) -> PathBuf {
    cfg.output_dir().join(format!("worker_{id}"))
}

fn run_worker_mode(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let id: usize = cfg.num("worker_id")?;
    let dir = worker_dir(cfg, id);
    write_resolved(cfg, &dir)?;
    let problem = cfg.problem_spec()?.build_shared()?;
    let mut w = WorkerConfig::new(cfg.algorithm()?, cfg.hyper_params()?, problem, id, cfg.num("steps")?);
    w.seed = cfg.num("seed")?;
    w.batch_size = cfg.num("batch_size")?;
    w.grad_sleep = cfg.duration_ms("grad_sleep_ms")?;
    w.metrics_every = cfg.num("metrics_every")?;
    let metrics = dir.join("worker_metrics.csv");
    w.metrics_path = Some(metrics.clone());
    let report = run_worker(cfg.get("connect"), &w)?;
    let state = dir.join("worker_state.csv");
    let mut text = vector_line("worker", id as i64, report.state.x.as_slice());
    let _ = writeln!(text, "steps,{},{}", report.state.t, report.pushes);
    fs::write(&state, text)?;
    Ok(vec![dir.join("resolved_config"), metrics, state])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(x: &[f64]) -> ParamVector {
        ParamVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn averaged_iterate_examples() {
        assert_eq!(averaged_iterate(&vec![pv(&[3.0]); 4], 0.5).unwrap(), pv(&[3.0]));
        assert_eq!(averaged_iterate(&[pv(&[0.0]), pv(&[2.0])], 0.0).unwrap(), pv(&[1.0]));
        assert_eq!(averaged_iterate(&[pv(&[0.0]), pv(&[2.0])], 0.5).unwrap(), pv(&[2.0]));
        assert!(matches!(averaged_iterate(&[], 0.5), Err(Error::Config(_))));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_VALIDATION);
        assert_eq!(exit_code(&Error::Diverged { step: 3 }), EXIT_DIVERGED);
        assert_eq!(exit_code(&Error::Timeout("t".into())), EXIT_TIMEOUT);
        assert_eq!(exit_code(&Error::Numerics("n".into())), EXIT_OTHER);
    }
}
