use std::net::TcpStream;
use std::path::PathBuf;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use crate::algorithms::{
    downpour_adopt_center, downpour_worker_step, eamsgd_worker_step, easgd_async_worker_step, Algorithm, HyperParams,
    WorkerState,
};
use crate::error::{Error, Result};
use crate::metrics::{write_metrics, MetricsRow};
use crate::net::wire::{read_message, write_message, WireMessage};
use crate::numeric::{GradientOracle, ParamVector, Rng};
use crate::problems::{shard, DataShard};
use crate::sim::DIVERGENCE_THRESHOLD;

/// Reconnect schedule: the first retry waits `initial`, each later one twice
/// as long up to `max`, and the worker aborts after `attempts` failures. A
/// request whose reply was lost is sent again, so a push can be applied twice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub initial: Duration,
    pub max: Duration,
    pub attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { initial: Duration::from_millis(50), max: Duration::from_secs(1), attempts: 10 }
    }
}

#[derive(Debug, Clone)]
pub struct WorkerConfig {
    /// `easgd_async`, `eamsgd` or `downpour`.
    pub algorithm: Algorithm,
    pub hp: HyperParams,
    pub problem: Arc<dyn GradientOracle>,
    pub worker_id: usize,
    pub seed: u64,
    pub steps: u64,
    pub batch_size: usize,
    /// Start point; defaults to the problem's initial point for `seed`.
    pub initial_x: Option<ParamVector>,
    /// Extra time spent in every gradient step.
    pub grad_sleep: Duration,
    pub retry: RetryPolicy,
    /// Record the shard loss every this many steps; 0 disables worker metrics.
    pub metrics_every: u64,
    pub metrics_path: Option<PathBuf>,
}

impl WorkerConfig {
    pub fn new(
        algorithm: Algorithm,
        hp: HyperParams,
        problem: Arc<dyn GradientOracle>,
        worker_id: usize,
        steps: u64,
    ) -> Self {
        WorkerConfig {
            algorithm,
            hp,
            problem,
            worker_id,
            seed: 0,
            steps,
            batch_size: 1,
            initial_x: None,
            grad_sleep: Duration::ZERO,
            retry: RetryPolicy::default(),
            metrics_every: 0,
            metrics_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.hp.validate()?;
        if !matches!(self.algorithm, Algorithm::EasgdAsync | Algorithm::Eamsgd | Algorithm::Downpour) {
            return Err(Error::config(format!(
                "network workers run easgd_async, eamsgd or downpour, not {}",
                self.algorithm.as_str()
            )));
        }
        if self.worker_id >= self.hp.p {
            return Err(Error::config(format!("worker id {} out of range for p = {}", self.worker_id, self.hp.p)));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if let Some(x) = &self.initial_x {
            crate::error::check_dims(self.problem.dim(), x.dim())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct WorkerReport {
    pub state: WorkerState,
    pub pushes: u64,
    pub fetches: u64,
    /// The center answered SHUTDOWN before all steps were taken.
    pub stopped_by_center: bool,
    pub metrics: Vec<MetricsRow>,
}

/// Blocking request/reply connection that reconnects per [`RetryPolicy`].
struct Connection {
    addr: String,
    stream: Option<TcpStream>,
    retry: RetryPolicy,
}

impl Connection {
    fn request(&mut self, msg: &WireMessage, step: u64) -> Result<WireMessage> {
        let mut wait = self.retry.initial;
        let mut last_error = String::new();
        for attempt in 0..=self.retry.attempts {
            if attempt > 0 {
                log::warn!("request {} failed ({last_error}); retrying in {wait:?}", msg.name());
                thread::sleep(wait);
                wait = (wait * 2).min(self.retry.max);
            }
            match self.try_request(msg) {
                Ok(WireMessage::Error(e)) => {
                    return Err(Error::protocol(format!("center rejected {}: {e}", msg.name())))
                }
                Ok(reply) => return Ok(reply),
                Err(Error::Io(e)) => {
                    self.stream = None;
                    last_error = e.to_string();
                }
                Err(Error::Protocol(e)) if e.contains("closed") => {
                    self.stream = None;
                    last_error = e;
                }
                Err(e) => return Err(e),
            }
        }
        Err(Error::WorkerAbort { step, reason: format!("{} retries exhausted: {last_error}", self.retry.attempts) })
    }

    fn try_request(&mut self, msg: &WireMessage) -> Result<WireMessage> {
        if self.stream.is_none() {
            let s = TcpStream::connect(&self.addr)?;
            s.set_nodelay(true)?;
            self.stream = Some(s);
        }
        let stream = self.stream.as_mut().expect("connected");
        write_message(stream, msg)?;
        read_message(stream)?.ok_or_else(|| Error::protocol("center closed the connection"))
    }
}

fn unexpected(what: &str, reply: &WireMessage) -> Error {
    Error::protocol(format!("expected {what}, center sent {}", reply.name()))
}

/// Runs one worker against the center at `addr`. Uses the same kernels,
/// shard and generator as the simulator, so a single worker reproduces a
/// simulated run exactly.
pub fn run_worker(addr: &str, cfg: &WorkerConfig) -> Result<WorkerReport> {
    cfg.validate()?;
    let problem = cfg.problem.as_ref();
    let hp = &cfg.hp;
    let id = cfg.worker_id;
    let x0 = cfg.initial_x.clone().unwrap_or_else(|| problem.initial_point(cfg.seed));
    let worker_shard = if problem.num_samples() > 0 {
        shard(problem.num_samples(), hp.p, cfg.seed)?.swap_remove(id)
    } else {
        DataShard::population(id)
    };
    let mut ws = WorkerState::new(x0, worker_shard, Rng::for_worker(cfg.seed, id), cfg.batch_size);
    let mut acc = ParamVector::zeros(ws.x.dim());
    let mut conn = Connection { addr: addr.to_string(), stream: None, retry: cfg.retry };
    let alpha = hp.alpha();
    let (mut pushes, mut fetches) = (0u64, 0u64);
    let mut stopped_by_center = false;
    let mut metrics = Vec::new();
    let start = Instant::now();
    let diverged = |step: u64| {
        move |e: Error| match e {
            Error::Numerics(_) => Error::Diverged { step },
            other => other,
        }
    };

    'steps: while ws.t < cfg.steps {
        let step = ws.t;
        if !cfg.grad_sleep.is_zero() {
            thread::sleep(cfg.grad_sleep);
        }
        match cfg.algorithm {
            Algorithm::Downpour => {
                let out = downpour_worker_step(ws, acc, problem, hp).map_err(diverged(step))?;
                acc = out.accumulated;
                ws = out.worker;
                if let Some(u) = out.push {
                    match conn.request(&WireMessage::PushGrad(u.into_vec()), step)? {
                        WireMessage::Ack => pushes += 1,
                        WireMessage::Shutdown => {
                            stopped_by_center = true;
                            break 'steps;
                        }
                        other => return Err(unexpected("ACK", &other)),
                    }
                    match conn.request(&WireMessage::Fetch, step)? {
                        WireMessage::FetchReply { x, .. } => {
                            fetches += 1;
                            ws = downpour_adopt_center(ws, &ParamVector::new(x)?)?;
                        }
                        WireMessage::Shutdown => {
                            stopped_by_center = true;
                            break 'steps;
                        }
                        other => return Err(unexpected("FETCH_REPLY", &other)),
                    }
                }
            }
            _ => {
                let snapshot = if !hp.is_comm_step(ws.t) {
                    None
                } else if alpha == 0.0 {
                    Some(ws.x.clone())
                } else {
                    match conn.request(&WireMessage::Fetch, step)? {
                        WireMessage::FetchReply { x, .. } => {
                            fetches += 1;
                            Some(ParamVector::new(x)?)
                        }
                        WireMessage::Shutdown => {
                            stopped_by_center = true;
                            break 'steps;
                        }
                        other => return Err(unexpected("FETCH_REPLY", &other)),
                    }
                };
                let (next, elastic) = if cfg.algorithm == Algorithm::Eamsgd {
                    eamsgd_worker_step(ws, snapshot.as_ref(), problem, hp)
                } else {
                    easgd_async_worker_step(ws, snapshot.as_ref(), problem, hp)
                }
                .map_err(diverged(step))?;
                ws = next;
                if let (Some(e), true) = (elastic, alpha != 0.0) {
                    match conn.request(&WireMessage::PushElastic(e.into_vec()), step)? {
                        WireMessage::Ack => pushes += 1,
                        WireMessage::Shutdown => {
                            stopped_by_center = true;
                            break 'steps;
                        }
                        other => return Err(unexpected("ACK", &other)),
                    }
                }
            }
        }
        if !(ws.x.norm() <= DIVERGENCE_THRESHOLD) || !(ws.v.norm() <= DIVERGENCE_THRESHOLD) {
            return Err(Error::Diverged { step });
        }
        if cfg.metrics_every > 0 && ws.t.is_multiple_of(cfg.metrics_every) {
            metrics.push(MetricsRow {
                wall_clock_s: start.elapsed().as_secs_f64(),
                sim_time: None,
                center_version: pushes,
                worker_id: id as i64,
                objective: problem.loss(&ws.x, &ws.shard.indices).map_err(diverged(step))?,
                dist_to_opt: problem.optimum().map(|o| ws.x.distance(o)).transpose()?,
                disagreement: None,
            });
        }
    }
    match conn.request(&WireMessage::Shutdown, ws.t) {
        Ok(_) => {}
        Err(e) => log::warn!("worker {id}: final SHUTDOWN failed: {e}"),
    }
    if let Some(path) = &cfg.metrics_path {
        write_metrics(path, &metrics)?;
    }
    Ok(WorkerReport { state: ws, pushes, fetches, stopped_by_center, metrics })
}
