use std::fmt::Write as _;
use std::fs::{self, File};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use crate::cli::config::ExperimentConfig;
use crate::cli::run::write_resolved;
use crate::error::{Error, Result};
use crate::metrics::read_metrics;
use crate::sim::{run_sim, Schedule, ScheduleKind};

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupRow {
    pub p: usize,
    /// Seconds from the center's first message to the first objective poll at or below the threshold.
    pub time_to_threshold_s: Option<f64>,
    pub speedup: Option<f64>,
}

impl SpeedupRow {
    pub fn reached(&self) -> bool {
        self.time_to_threshold_s.is_some()
    }
}

/// Runs the configured algorithm with `p = 1` in the simulator for `steps`
/// steps. Returns the threshold to use: `stop_threshold` when set (after
/// checking the pilot reaches it), else `f_min + threshold_fraction * (f_0 - f_min)`
/// from the pilot's learning curve.
pub fn pilot_threshold(cfg: &ExperimentConfig) -> Result<f64> {
    let mut pilot = cfg.clone();
    pilot.set("p", "1")?;
    pilot.set("mode", "sim")?;
    let mut sim = pilot.sim_config()?;
    sim.schedule = Schedule::new(ScheduleKind::RoundRobin);
    sim.cadence = 1;
    sim.record_snapshots = false;
    let out = run_sim(sim)?;
    let f0 = out.metrics.first().map(|m| m.objective).unwrap_or(f64::NAN);
    let fmin = out.metrics.iter().map(|m| m.objective).fold(f64::INFINITY, f64::min);
    match cfg.opt_num::<f64>("stop_threshold")? {
        Some(th) if fmin <= th => Ok(th),
        Some(th) => Err(Error::config(format!(
            "key `stop_threshold`: the p = 1 pilot only reaches {fmin}, not {th}, within {} steps",
            cfg.get("steps")
        ))),
        None => {
            let frac: f64 = cfg.num("threshold_fraction")?;
            if !(frac > 0.0 && frac < 1.0) {
                return Err(Error::config("key `threshold_fraction` must lie in (0, 1)"));
            }
            Ok(fmin + frac * (f0 - fmin))
        }
    }
}

fn free_local_addr() -> Result<String> {
    let l = TcpListener::bind("127.0.0.1:0")?;
    Ok(l.local_addr()?.to_string())
}

fn spawn(exe: &Path, config: &Path, log: &Path) -> Result<Child> {
    let out = File::create(log)?;
    let err = out.try_clone()?;
    Ok(Command::new(exe).arg("run").arg(config).stdout(Stdio::from(out)).stderr(Stdio::from(err)).spawn()?)
}

fn wait_all(children: &mut [Child], timeout: Duration) -> Result<bool> {
    let start = Instant::now();
    loop {
        let mut running = false;
        for c in children.iter_mut() {
            if c.try_wait()?.is_none() {
                running = true;
            }
        }
        if !running {
            return Ok(true);
        }
        if start.elapsed() > timeout {
            for c in children.iter_mut() {
                let _ = c.kill();
                let _ = c.wait();
            }
            return Ok(false);
        }
        thread::sleep(Duration::from_millis(10));
    }
}

/// Launches a center and `p` workers as `exe run <config>` processes for
/// every `p` in `speedup_p`, all writing below `output_dir/p<p>`.
pub fn speedup_table(cfg: &ExperimentConfig, exe: &Path) -> Result<Vec<SpeedupRow>> {
    let threshold = pilot_threshold(cfg)?;
    log::info!("speedup threshold {threshold}");
    let timeout = Duration::from_secs_f64(cfg.num("timeout_s")?);
    let mut rows = Vec::new();
    for p in cfg.list::<usize>("speedup_p")? {
        if p == 0 {
            return Err(Error::config("key `speedup_p`: p must be at least 1"));
        }
        let dir = cfg.output_dir().join(format!("p{p}"));
        fs::create_dir_all(&dir)?;
        let addr = free_local_addr()?;
        let mut base = cfg.clone();
        base.set("p", p.to_string())?;
        base.set("workers", p.to_string())?;
        base.set("output_dir", dir.display().to_string())?;
        base.set("stop_threshold", threshold.to_string())?;
        base.set("bind", addr.clone())?;
        base.set("connect", addr)?;

        let mut center = base.clone();
        center.set("mode", "net-center")?;
        let center_cfg = dir.join("center.cfg");
        fs::write(&center_cfg, center.to_text())?;
        let mut children = vec![spawn(exe, &center_cfg, &dir.join("center.log"))?];
        for id in 0..p {
            let mut worker = base.clone();
            worker.set("mode", "net-worker")?;
            worker.set("worker_id", id.to_string())?;
            let path = dir.join(format!("worker_{id}.cfg"));
            fs::write(&path, worker.to_text())?;
            children.push(spawn(exe, &path, &dir.join(format!("worker_{id}.log")))?);
        }
        let finished = wait_all(&mut children, timeout)?;
        let crossing = if finished {
            read_metrics(&dir.join("center_metrics.csv"))?
                .into_iter()
                .find(|m| m.objective <= threshold)
                .map(|m| m.wall_clock_s)
        } else {
            log::warn!("p = {p}: timed out after {timeout:?}");
            None
        };
        rows.push(SpeedupRow { p, time_to_threshold_s: crossing, speedup: None });
    }
    let t1 = rows.iter().find(|r| r.p == 1).and_then(|r| r.time_to_threshold_s);
    for r in &mut rows {
        r.speedup = match (t1, r.time_to_threshold_s) {
            (Some(a), Some(b)) if b > 0.0 => Some(a / b),
            _ => None,
        };
    }
    Ok(rows)
}

pub fn speedup_to_csv(rows: &[SpeedupRow]) -> String {
    let mut out = String::from("p,time_to_threshold_s,speedup,reached\n");
    for r in rows {
        let t = r.time_to_threshold_s.map(|t| t.to_string()).unwrap_or_default();
        let s = r.speedup.map(|s| s.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{t},{s},{}", r.p, r.reached());
    }
    out
}

/// Speedup mode: writes `speedup.csv` and fails with a timeout when some `p`
/// never reached the threshold.
pub fn speedup_run_with(cfg: &ExperimentConfig, exe: &Path) -> Result<Vec<PathBuf>> {
    let dir = cfg.output_dir();
    write_resolved(cfg, &dir)?;
    let rows = speedup_table(cfg, exe)?;
    let path = dir.join("speedup.csv");
    fs::write(&path, speedup_to_csv(&rows))?;
    let unreached: Vec<String> = rows.iter().filter(|r| !r.reached()).map(|r| r.p.to_string()).collect();
    if !unreached.is_empty() {
        return Err(Error::Timeout(format!("threshold not reached for p = {}", unreached.join(", "))));
    }
    Ok(vec![dir.join("resolved_config"), path])
}

pub fn speedup_run(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    speedup_run_with(cfg, &std::env::current_exe()?)
}
