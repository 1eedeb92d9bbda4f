use crate::algorithms::{
    admm_roundrobin_step, center_apply_elastic, downpour_adopt_center, downpour_worker_step, eamsgd_worker_step,
    easgd_async_worker_step, easgd_sync_round, msgd_step, sgd_worker_step, AdmmWorkerState, Algorithm, CenterState,
    CommOrder, WorkerState,
};
use crate::error::{Error, Result};
use crate::metrics::MetricsRow;
use crate::numeric::{ParamVector, Rng};
use crate::problems::{shard, DataShard};
use crate::sim::{disagreement, EventKind, ScheduleKind, SimConfig, SimEvent};

/// States are declared diverged once any Euclidean norm exceeds this.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Terminal state and recorded history of a simulation.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub workers: Vec<WorkerState>,
    /// The center; for `sgd`/`msgd` the worker average, versioned by completed rounds.
    pub center: CenterState,
    /// Primal/dual pairs, only for `admm_rr`.
    pub admm: Vec<AdmmWorkerState>,
    pub metrics: Vec<MetricsRow>,
    pub events: Vec<SimEvent>,
    pub center_snapshots: Vec<ParamVector>,
    pub sim_time: f64,
}

/// Step-by-step discrete-event simulator behind [`run_sim`].
#[derive(Debug)]
pub struct Simulator {
    cfg: SimConfig,
    workers: Vec<WorkerState>,
    center: CenterState,
    accumulators: Vec<ParamVector>,
    admm: Vec<AdmmWorkerState>,
    admm_h: f64,
    next_time: Vec<f64>,
    clock: f64,
    sched_rng: Rng,
    events: Vec<SimEvent>,
    metrics: Vec<MetricsRow>,
    snapshots: Vec<ParamVector>,
    local_steps: u64,
    rounds: u64,
    rr_cursor: usize,
    last_metrics_version: u64,
}

fn placeholder() -> WorkerState {
    WorkerState {
        x: ParamVector::from_raw(Vec::new()),
        v: ParamVector::from_raw(Vec::new()),
        t: 0,
        shard: DataShard::population(usize::MAX),
        rng: Rng::new(0),
        batch_size: 0,
    }
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let p = cfg.hp.p;
        let problem = &cfg.problem;
        let x0 = cfg.initial_center.clone().unwrap_or_else(|| problem.initial_point(cfg.seed));
        let starts = cfg.initial_workers.clone().unwrap_or_else(|| vec![x0.clone(); p]);
        let shards = if problem.num_samples() > 0 {
            shard(problem.num_samples(), p, cfg.seed)?
        } else {
            (0..p).map(DataShard::population).collect()
        };
        let workers: Vec<WorkerState> = starts
            .into_iter()
            .zip(shards)
            .enumerate()
            .map(|(i, (x, s))| WorkerState::new(x, s, Rng::for_worker(cfg.seed, i), cfg.batch_size))
            .collect();
        let admm_h = if cfg.algorithm == Algorithm::AdmmRoundRobin { cfg.admm_curvature()? } else { 0.0 };
        let admm = if cfg.algorithm == Algorithm::AdmmRoundRobin {
            workers.iter().map(|w| AdmmWorkerState { x: w.x[0], lambda: 0.0 }).collect()
        } else {
            Vec::new()
        };
        let accumulators =
            if cfg.algorithm == Algorithm::Downpour { vec![ParamVector::zeros(x0.dim()); p] } else { Vec::new() };
        let mut sched_rng = Rng::new(cfg.schedule.seed);
        let next_time = if cfg.schedule.kind == ScheduleKind::AsyncRandom {
            (0..p).map(|i| cfg.schedule.sample(i, &mut sched_rng)).collect()
        } else {
            Vec::new()
        };
        let mut sim = Simulator {
            center: CenterState::new(x0),
            cfg,
            workers,
            accumulators,
            admm,
            admm_h,
            next_time,
            clock: 0.0,
            sched_rng,
            events: Vec::new(),
            metrics: Vec::new(),
            snapshots: Vec::new(),
            local_steps: 0,
            rounds: 0,
            rr_cursor: 0,
            last_metrics_version: 0,
        };
        if !sim.cfg.algorithm.has_center() {
            sim.center.x_tilde = sim.worker_mean()?;
        }
        sim.record_metrics()?;
        Ok(sim)
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn workers(&self) -> &[WorkerState] {
        &self.workers
    }

    pub fn center(&self) -> &CenterState {
        &self.center
    }

    pub fn admm_states(&self) -> &[AdmmWorkerState] {
        &self.admm
    }

    pub fn events(&self) -> &[SimEvent] {
        &self.events
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn is_done(&self) -> bool {
        match self.cfg.schedule.kind {
            ScheduleKind::Sync => self.rounds >= self.cfg.steps,
            _ => self.workers.iter().all(|w| w.t >= self.cfg.steps),
        }
    }

    /// The state vector the stability lab's round maps act on:
    /// `[x_1..x_p, x~]` for center algorithms, followed by the duals for
    /// `admm_rr`; `[x_1..x_p]` for `sgd` and `[x_1..x_p, v_1..v_p]` for `msgd`.
    /// Vectors are concatenated coordinate blocks.
    pub fn stacked_state(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.workers.iter().flat_map(|w| w.x.as_slice().to_vec()).collect();
        match self.cfg.algorithm {
            Algorithm::Sgd => {}
            Algorithm::Msgd => out.extend(self.workers.iter().flat_map(|w| w.v.as_slice().to_vec())),
            Algorithm::AdmmRoundRobin => {
                out.extend_from_slice(self.center.x_tilde.as_slice());
                out.extend(self.admm.iter().map(|a| a.lambda));
            }
            _ => out.extend_from_slice(self.center.x_tilde.as_slice()),
        }
        out
    }

    /// Executes the next scheduled unit: one synchronous round, or one local
    /// step of the next worker. Returns the number of events it produced,
    /// zero once every worker has finished.
    pub fn step(&mut self) -> Result<usize> {
        self.step_with(None)
    }

    /// Runs `n` units or until finished.
    pub fn advance(&mut self, n: usize) -> Result<()> {
        for _ in 0..n {
            if self.step()? == 0 {
                break;
            }
        }
        Ok(())
    }

    fn step_with(&mut self, forced: Option<usize>) -> Result<usize> {
        if self.is_done() {
            return Ok(0);
        }
        let before = self.events.len();
        let step_index = self.local_steps;
        let outcome = match self.cfg.schedule.kind {
            ScheduleKind::Sync => self.sync_round(),
            ScheduleKind::RoundRobin => {
                let w = forced.unwrap_or(self.rr_cursor);
                self.check_forced(w)?;
                self.clock += self.cfg.schedule.sample(w, &mut self.sched_rng);
                self.rr_cursor = (w + 1) % self.cfg.hp.p;
                self.worker_step(w)
            }
            ScheduleKind::AsyncRandom => {
                let w = match forced {
                    Some(w) => w,
                    None => self.earliest_worker(),
                };
                self.check_forced(w)?;
                self.clock = self.next_time[w];
                let r = self.worker_step(w);
                if self.workers[w].t < self.cfg.steps {
                    self.next_time[w] += self.cfg.schedule.sample(w, &mut self.sched_rng);
                }
                r
            }
        };
        match outcome {
            Err(Error::Numerics(_)) => return Err(Error::Diverged { step: step_index }),
            other => other?,
        }
        self.check_divergence(step_index)?;
        if !self.cfg.algorithm.has_center() {
            self.center.version = match self.cfg.schedule.kind {
                ScheduleKind::Sync => self.rounds,
                _ => self.local_steps / self.cfg.hp.p as u64,
            };
        }
        let v = self.center.version;
        if v != self.last_metrics_version && v.is_multiple_of(self.cfg.cadence) {
            self.record_metrics()?;
        }
        Ok(self.events.len() - before)
    }

    fn check_forced(&self, w: usize) -> Result<()> {
        if w >= self.cfg.hp.p || self.workers[w].t >= self.cfg.steps {
            return Err(Error::ReplayMismatch { index: self.events.len() });
        }
        Ok(())
    }

    fn earliest_worker(&self) -> usize {
        (0..self.cfg.hp.p)
            .filter(|&i| self.workers[i].t < self.cfg.steps)
            .min_by(|&a, &b| self.next_time[a].total_cmp(&self.next_time[b]).then(a.cmp(&b)))
            .expect("a worker with remaining steps")
    }

    fn push_event(&mut self, worker: usize, kind: EventKind, center_version: u64) {
        self.events.push(SimEvent { time: self.clock, worker, kind, center_version });
    }

    fn sync_round(&mut self) -> Result<()> {
        let p = self.cfg.hp.p;
        let duration = (0..p).map(|i| self.cfg.schedule.sample(i, &mut self.sched_rng)).fold(0.0, f64::max);
        self.clock += duration;
        let problem = self.cfg.problem.clone();
        match self.cfg.algorithm {
            Algorithm::EasgdSync => {
                let pre = self.center.version;
                let workers = std::mem::take(&mut self.workers);
                let center = self.center.clone();
                let (workers, center) = easgd_sync_round(workers, center, problem.as_ref(), &self.cfg.hp)?;
                self.workers = workers;
                self.center = center;
                for i in 0..p {
                    self.push_event(i, EventKind::Comm, pre);
                    self.push_event(i, EventKind::GradStep, pre + 1);
                }
            }
            Algorithm::Sgd | Algorithm::Msgd => {
                for i in 0..p {
                    self.local_update(i)?;
                    self.push_event(i, EventKind::GradStep, self.rounds);
                }
                self.center.x_tilde = self.worker_mean()?;
            }
            other => return Err(Error::config(format!("{} has no synchronous round", other.as_str()))),
        }
        self.rounds += 1;
        self.local_steps += p as u64;
        Ok(())
    }

    fn local_update(&mut self, w: usize) -> Result<()> {
        let problem = self.cfg.problem.clone();
        let ws = std::mem::replace(&mut self.workers[w], placeholder());
        self.workers[w] = match self.cfg.algorithm {
            Algorithm::Msgd => msgd_step(ws, problem.as_ref(), self.cfg.hp.eta, self.cfg.hp.delta)?,
            _ => sgd_worker_step(ws, problem.as_ref(), self.cfg.hp.eta)?,
        };
        Ok(())
    }

    fn worker_step(&mut self, w: usize) -> Result<()> {
        let problem = self.cfg.problem.clone();
        let hp = self.cfg.hp;
        match self.cfg.algorithm {
            Algorithm::Sgd | Algorithm::Msgd => {
                self.local_update(w)?;
                let v = (self.local_steps + 1) / hp.p as u64;
                self.push_event(w, EventKind::GradStep, v);
                self.center.x_tilde = self.worker_mean()?;
            }
            Algorithm::EasgdAsync | Algorithm::Eamsgd => {
                let ws = std::mem::replace(&mut self.workers[w], placeholder());
                let pre = self.center.version;
                let snapshot = hp.is_comm_step(ws.t).then(|| self.center.x_tilde.clone());
                let (ws, elastic) = if self.cfg.algorithm == Algorithm::Eamsgd {
                    eamsgd_worker_step(ws, snapshot.as_ref(), problem.as_ref(), &hp)?
                } else {
                    easgd_async_worker_step(ws, snapshot.as_ref(), problem.as_ref(), &hp)?
                };
                self.workers[w] = ws;
                match elastic {
                    Some(e) => {
                        self.center = center_apply_elastic(self.center.clone(), &e)?;
                        if hp.comm_order == CommOrder::After {
                            self.push_event(w, EventKind::GradStep, pre);
                            self.push_event(w, EventKind::Comm, pre);
                        } else {
                            self.push_event(w, EventKind::Comm, pre);
                            self.push_event(w, EventKind::GradStep, self.center.version);
                        }
                    }
                    None => self.push_event(w, EventKind::GradStep, pre),
                }
            }
            Algorithm::Downpour => {
                let ws = std::mem::replace(&mut self.workers[w], placeholder());
                let acc = std::mem::replace(&mut self.accumulators[w], ParamVector::from_raw(Vec::new()));
                let step = downpour_worker_step(ws, acc, problem.as_ref(), &hp)?;
                self.accumulators[w] = step.accumulated;
                self.push_event(w, EventKind::GradStep, self.center.version);
                self.workers[w] = match step.push {
                    Some(push) => {
                        self.center = center_apply_elastic(self.center.clone(), &push)?;
                        self.push_event(w, EventKind::Comm, self.center.version);
                        downpour_adopt_center(step.worker, &self.center.x_tilde)?
                    }
                    None => step.worker,
                };
            }
            Algorithm::AdmmRoundRobin => {
                let pre = self.center.version;
                let states = std::mem::take(&mut self.admm);
                let (states, x_tilde) = admm_roundrobin_step(states, w, self.center.x_tilde[0], self.admm_h, hp.rho)?;
                self.admm = states;
                self.center = CenterState { x_tilde: ParamVector::new(vec![x_tilde])?, version: pre + 1 };
                let ws = &mut self.workers[w];
                ws.x = ParamVector::new(vec![self.admm[w].x])?;
                ws.t += 1;
                self.push_event(w, EventKind::Comm, pre);
            }
            Algorithm::EasgdSync => unreachable!("validated: easgd_sync only runs under the sync schedule"),
        }
        self.local_steps += 1;
        Ok(())
    }

    fn worker_mean(&self) -> Result<ParamVector> {
        let refs: Vec<&ParamVector> = self.workers.iter().map(|w| &w.x).collect();
        ParamVector::mean(&refs)
    }

    fn check_divergence(&self, step: u64) -> Result<()> {
        let too_big = |v: &ParamVector| !(v.norm() <= DIVERGENCE_THRESHOLD);
        if self.workers.iter().any(|w| too_big(&w.x) || too_big(&w.v))
            || too_big(&self.center.x_tilde)
            || self.admm.iter().any(|a| !(a.lambda.abs() <= DIVERGENCE_THRESHOLD))
        {
            return Err(Error::Diverged { step });
        }
        Ok(())
    }

    fn record_metrics(&mut self) -> Result<()> {
        let view = &self.center.x_tilde;
        let objective = self.cfg.problem.exact_loss(view).map_err(|_| Error::Diverged { step: self.local_steps })?;
        let dist_to_opt = self.cfg.problem.optimum().map(|opt| view.distance(opt)).transpose()?;
        let refs: Vec<&ParamVector> = self.workers.iter().map(|w| &w.x).collect();
        self.metrics.push(MetricsRow {
            wall_clock_s: self.clock,
            sim_time: Some(self.clock),
            center_version: self.center.version,
            worker_id: -1,
            objective,
            dist_to_opt,
            disagreement: Some(disagreement(&refs)?),
        });
        if self.cfg.record_snapshots {
            self.snapshots.push(view.clone());
        }
        self.last_metrics_version = self.center.version;
        Ok(())
    }

    /// Runs to completion and returns the terminal state. A final metrics
    /// row is added unless one was just recorded for the same state.
    pub fn run(mut self) -> Result<SimOutput> {
        while self.step()? > 0 {}
        self.into_output()
    }

    pub fn into_output(mut self) -> Result<SimOutput> {
        let stale = self
            .metrics
            .last()
            .is_none_or(|m| m.center_version != self.center.version || m.sim_time != Some(self.clock));
        if stale {
            self.record_metrics()?;
        }
        Ok(SimOutput {
            workers: self.workers,
            center: self.center,
            admm: self.admm,
            metrics: self.metrics,
            events: self.events,
            center_snapshots: self.snapshots,
            sim_time: self.clock,
        })
    }
}

/// Deterministic simulation of `cfg` to completion.
pub fn run_sim(cfg: SimConfig) -> Result<SimOutput> {
    Simulator::new(cfg)?.run()
}

/// Re-executes `cfg` driven by the worker order recorded in `log`, checking
/// every regenerated event bit-for-bit, then compares the terminal state with
/// a fresh [`run_sim`]. Any difference is reported as the index of the first
/// divergent event (`log.len()` for a terminal-state difference).
pub fn replay_check(log: &[SimEvent], cfg: &SimConfig) -> Result<bool> {
    let reference = run_sim(cfg.clone())?;
    let mut sim = Simulator::new(cfg.clone())?;
    let mut k = 0;
    while k < log.len() {
        let produced = match sim.step_with(Some(log[k].worker)) {
            Ok(0) | Err(Error::ReplayMismatch { .. }) => return Err(Error::ReplayMismatch { index: k }),
            Ok(n) => n,
            Err(e) => return Err(e),
        };
        let start = sim.events.len() - produced;
        for (j, e) in sim.events[start..].iter().enumerate() {
            match log.get(k + j) {
                Some(logged) if logged.same_as(e) => {}
                _ => return Err(Error::ReplayMismatch { index: k + j }),
            }
        }
        k += produced;
    }
    let terminal_matches = sim.is_done()
        && sim.workers.iter().zip(&reference.workers).all(|(a, b)| a.x == b.x && a.v == b.v && a.t == b.t)
        && sim.center == reference.center
        && sim.admm == reference.admm;
    if !terminal_matches {
        return Err(Error::ReplayMismatch { index: log.len() });
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::algorithms::HyperParams;
    use crate::numeric::GradientOracle;
    use crate::problems::{make_quadratic, QuadraticProblem};
    use crate::sim::{DurationLaw, Schedule};

    fn scalar(h: f64, sigma: f64) -> Arc<dyn GradientOracle> {
        Arc::new(QuadraticProblem::scalar(h, 0.0, sigma).unwrap())
    }

    fn pv(x: f64) -> ParamVector {
        ParamVector::new(vec![x]).unwrap()
    }

    fn config(algorithm: Algorithm, kind: ScheduleKind, p: usize, steps: u64) -> SimConfig {
        let hp = HyperParams::from_alpha(0.1, 0.05, 1, p, 0.9).unwrap();
        let mut cfg = SimConfig::new(algorithm, hp, scalar(1.0, 0.0), Schedule::new(kind), steps);
        cfg.initial_center = Some(pv(1.0));
        cfg
    }

    #[test]
    fn sync_easgd_matches_hand_iteration() {
        let out = run_sim(config(Algorithm::EasgdSync, ScheduleKind::Sync, 1, 3)).unwrap();
        let (eta, alpha) = (0.1, 0.05);
        let (mut x, mut c) = (1.0f64, 1.0f64);
        for _ in 0..3 {
            let (nx, nc) = (x - eta * x - alpha * (x - c), c + alpha * (x - c));
            x = nx;
            c = nc;
        }
        assert!((out.workers[0].x[0] - x).abs() < 1e-15);
        assert!((out.center.x_tilde[0] - c).abs() < 1e-15);
        assert_eq!(out.center.version, 3);
        assert_eq!(out.events.len(), 6);
        assert_eq!(out.metrics.len(), 4);
        assert_eq!(out.sim_time, 3.0);
    }

    #[test]
    fn round_robin_single_worker_concurrent_matches_sync() {
        let mut a = config(Algorithm::EasgdAsync, ScheduleKind::RoundRobin, 1, 20);
        a.hp = a.hp.with_comm_order(CommOrder::Concurrent);
        let s = run_sim(config(Algorithm::EasgdSync, ScheduleKind::Sync, 1, 20)).unwrap();
        let r = run_sim(a).unwrap();
        assert_eq!(r.workers[0].x, s.workers[0].x);
        assert_eq!(r.center.x_tilde, s.center.x_tilde);
    }

    #[test]
    fn runs_are_deterministic_and_replayable() {
        let problem: Arc<dyn GradientOracle> = Arc::new(make_quadratic(4, 10.0, 0.1, 3).unwrap());
        for alg in [Algorithm::EasgdAsync, Algorithm::Eamsgd, Algorithm::Downpour, Algorithm::Sgd, Algorithm::Msgd] {
            let hp = HyperParams::from_alpha(0.05, 0.02, 3, 4, 0.9).unwrap();
            let mut schedule = Schedule::new(ScheduleKind::AsyncRandom);
            schedule.law = DurationLaw::Exponential;
            schedule.costs = vec![1.0, 2.0, 0.5, 1.0];
            schedule.seed = 11;
            let mut cfg = SimConfig::new(alg, hp, problem.clone(), schedule, 30);
            cfg.seed = 5;
            let a = run_sim(cfg.clone()).unwrap();
            let b = run_sim(cfg.clone()).unwrap();
            assert_eq!(events_text(&a), events_text(&b));
            assert_eq!(a.workers, b.workers);
            assert!(replay_check(&a.events, &cfg).unwrap());
            let mut bad = a.events.clone();
            bad[7].time = f64::from_bits(bad[7].time.to_bits() + 1);
            assert!(matches!(replay_check(&bad, &cfg), Err(Error::ReplayMismatch { index: 7 })));
        }
    }

    fn events_text(o: &SimOutput) -> String {
        crate::sim::events_to_text(&o.events)
    }

    #[test]
    fn async_events_are_time_ordered_with_lowest_id_ties() {
        let cfg = config(Algorithm::EasgdAsync, ScheduleKind::AsyncRandom, 3, 4);
        let out = run_sim(cfg).unwrap();
        let grads: Vec<&SimEvent> = out.events.iter().filter(|e| e.kind == EventKind::GradStep).collect();
        assert_eq!(grads.len(), 12);
        for w in grads.windows(2) {
            assert!(w[0].time < w[1].time || (w[0].time == w[1].time && w[0].worker < w[1].worker));
        }
    }

    #[test]
    fn admm_round_robin_versions_every_turn() {
        let hp = HyperParams::new(0.1, 0.5, 1, 3, 0.0).unwrap();
        let mut cfg =
            SimConfig::new(Algorithm::AdmmRoundRobin, hp, scalar(1.0, 0.0), Schedule::new(ScheduleKind::RoundRobin), 5);
        cfg.initial_center = Some(pv(2.0));
        let out = run_sim(cfg).unwrap();
        assert_eq!(out.center.version, 15);
        assert!(out.center.x_tilde[0].abs() < 2.0);
        assert_eq!(out.admm.len(), 3);
    }

    #[test]
    fn divergence_is_reported_with_step_index() {
        let hp = HyperParams::from_alpha(3.0, 0.0, 1, 1, 0.0).unwrap();
        let mut cfg =
            SimConfig::new(Algorithm::Sgd, hp, scalar(1.0, 0.0), Schedule::new(ScheduleKind::RoundRobin), 1000);
        cfg.initial_center = Some(pv(1.0));
        match run_sim(cfg) {
            Err(Error::Diverged { step }) => assert!(step > 10 && step < 100, "{step}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn incompatible_schedule_is_rejected() {
        let cfg = config(Algorithm::EasgdSync, ScheduleKind::AsyncRandom, 2, 3);
        assert!(matches!(run_sim(cfg), Err(Error::Config(_))));
    }

    #[test]
    fn metrics_follow_cadence() {
        let mut cfg = config(Algorithm::EasgdSync, ScheduleKind::Sync, 2, 10);
        cfg.cadence = 4;
        let out = run_sim(cfg).unwrap();
        let versions: Vec<u64> = out.metrics.iter().map(|m| m.center_version).collect();
        assert_eq!(versions, vec![0, 4, 8, 10]);
    }
}
