use std::io::ErrorKind;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use crate::algorithms::CenterState;
use crate::error::{Error, Result};
use crate::metrics::{write_metrics, MetricsRow};
use crate::net::wire::{read_message, write_message, WireMessage};
use crate::numeric::{GradientOracle, ParamVector};

pub const DEFAULT_POLL_INTERVAL: Duration = Duration::from_millis(5);

#[derive(Debug, Clone)]
pub struct CenterConfig {
    pub bind: String,
    pub initial: ParamVector,
    /// The server stops after this many workers have sent SHUTDOWN.
    pub workers: usize,
    /// Full-data objective polled every `poll_interval`; no metrics without it.
    pub objective: Option<Arc<dyn GradientOracle>>,
    /// Once the polled objective is at or below this value, every further
    /// worker request is answered with SHUTDOWN.
    pub stop_threshold: Option<f64>,
    pub poll_interval: Duration,
    pub metrics_path: Option<PathBuf>,
}

impl CenterConfig {
    pub fn new(bind: impl Into<String>, initial: ParamVector, workers: usize) -> Self {
        CenterConfig {
            bind: bind.into(),
            initial,
            workers,
            objective: None,
            stop_threshold: None,
            poll_interval: DEFAULT_POLL_INTERVAL,
            metrics_path: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CenterReport {
    pub center: CenterState,
    /// Accepted PUSH_ELASTIC and PUSH_GRAD messages; always equals the center version.
    pub pushes: u64,
    /// Seconds from the first worker message until the objective first met the threshold.
    pub threshold_reached_s: Option<f64>,
    pub metrics: Vec<MetricsRow>,
}

enum Request {
    Fetch(Sender<WireMessage>),
    Push(Vec<f64>, Sender<WireMessage>),
    WorkerDone,
    Opened,
    Closed,
}

/// A bound but not yet serving center.
#[derive(Debug)]
pub struct CenterServer {
    listener: TcpListener,
    cfg: CenterConfig,
}

impl CenterServer {
    pub fn bind(cfg: CenterConfig) -> Result<Self> {
        if cfg.workers == 0 {
            return Err(Error::config("the center needs at least one worker"));
        }
        if let Some(o) = &cfg.objective {
            crate::error::check_dims(o.dim(), cfg.initial.dim())?;
        }
        let listener = TcpListener::bind(&cfg.bind)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("cannot bind {}: {e}", cfg.bind))))?;
        Ok(CenterServer { listener, cfg })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Serves until `workers` SHUTDOWN messages have arrived, or until the
    /// stop threshold was met and every connection has closed.
    pub fn run(self) -> Result<CenterReport> {
        let CenterServer { listener, cfg } = self;
        let dim = cfg.initial.dim();
        let (tx, rx) = mpsc::channel::<Request>();
        let stop = Arc::new(AtomicBool::new(false));
        listener.set_nonblocking(true)?;
        let acceptor = {
            let stop = stop.clone();
            thread::spawn(move || accept_loop(listener, tx, stop, dim))
        };

        let mut center = CenterState::new(cfg.initial.clone());
        let mut metrics = Vec::new();
        let mut start: Option<Instant> = None;
        let mut last_poll = Instant::now();
        let mut stopping = false;
        let mut threshold_reached_s = None;
        let (mut done, mut open, mut seen) = (0usize, 0usize, 0usize);
        let result = loop {
            match rx.recv_timeout(cfg.poll_interval) {
                Ok(req) => {
                    start.get_or_insert_with(Instant::now);
                    match req {
                        Request::Fetch(reply) => {
                            let msg = if stopping {
                                WireMessage::Shutdown
                            } else {
                                WireMessage::FetchReply {
                                    version: center.version,
                                    x: center.x_tilde.as_slice().to_vec(),
                                }
                            };
                            let _ = reply.send(msg);
                        }
                        Request::Push(delta, reply) => {
                            let msg = if stopping {
                                WireMessage::Shutdown
                            } else {
                                match apply(&center, delta) {
                                    Ok(next) => {
                                        center = next;
                                        WireMessage::Ack
                                    }
                                    Err(e) => WireMessage::Error(e.to_string()),
                                }
                            };
                            let _ = reply.send(msg);
                        }
                        Request::WorkerDone => done += 1,
                        Request::Opened => {
                            open += 1;
                            seen += 1;
                        }
                        Request::Closed => open -= 1,
                    }
                }
                Err(RecvTimeoutError::Timeout) => {}
                Err(RecvTimeoutError::Disconnected) => break Err(Error::protocol("connection acceptor stopped")),
            }
            if let (Some(t0), Some(oracle)) = (start, &cfg.objective) {
                if last_poll.elapsed() >= cfg.poll_interval {
                    last_poll = Instant::now();
                    let row = match center_row(oracle.as_ref(), &center, t0) {
                        Ok(r) => r,
                        Err(e) => break Err(e),
                    };
                    if let Some(th) = cfg.stop_threshold {
                        if !stopping && row.objective <= th {
                            stopping = true;
                            threshold_reached_s = Some(row.wall_clock_s);
                            log::info!(
                                "objective {} reached threshold {th} after {} s",
                                row.objective,
                                row.wall_clock_s
                            );
                        }
                    }
                    metrics.push(row);
                }
            }
            if done >= cfg.workers || (stopping && seen > 0 && open == 0) {
                break Ok(());
            }
        };
        stop.store(true, Ordering::SeqCst);
        let _ = acceptor.join();
        result?;
        if let Some(oracle) = &cfg.objective {
            metrics.push(center_row(oracle.as_ref(), &center, start.unwrap_or_else(Instant::now))?);
        }
        if let Some(path) = &cfg.metrics_path {
            write_metrics(path, &metrics)?;
        }
        Ok(CenterReport { pushes: center.version, center, threshold_reached_s, metrics })
    }
}

pub fn serve_center(cfg: CenterConfig) -> Result<CenterReport> {
    CenterServer::bind(cfg)?.run()
}

fn apply(center: &CenterState, delta: Vec<f64>) -> Result<CenterState> {
    let e = ParamVector::new(delta)?;
    crate::algorithms::center_apply_elastic(center.clone(), &e)
}

fn center_row(oracle: &dyn GradientOracle, center: &CenterState, t0: Instant) -> Result<MetricsRow> {
    let x = &center.x_tilde;
    Ok(MetricsRow {
        wall_clock_s: t0.elapsed().as_secs_f64(),
        sim_time: None,
        center_version: center.version,
        worker_id: -1,
        objective: oracle.exact_loss(x)?,
        dist_to_opt: oracle.optimum().map(|o| x.distance(o)).transpose()?,
        disagreement: None,
    })
}

fn accept_loop(listener: TcpListener, tx: Sender<Request>, stop: Arc<AtomicBool>, dim: usize) {
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                log::debug!("worker connected from {peer}");
                if tx.send(Request::Opened).is_err() {
                    return;
                }
                let tx = tx.clone();
                thread::spawn(move || {
                    if let Err(e) = serve_connection(stream, &tx, dim) {
                        log::warn!("connection from {peer} closed: {e}");
                    }
                    let _ = tx.send(Request::Closed);
                });
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(2)),
            Err(e) => {
                log::warn!("accept failed: {e}");
                thread::sleep(Duration::from_millis(2));
            }
        }
    }
}

fn serve_connection(mut stream: TcpStream, tx: &Sender<Request>, dim: usize) -> Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    loop {
        let msg = match read_message(&mut stream) {
            Ok(Some(m)) => m,
            Ok(None) => return Ok(()),
            Err(e @ Error::Protocol(_)) => {
                let _ = write_message(&mut stream, &WireMessage::Error(e.to_string()));
                return Err(e);
            }
            Err(e) => return Err(e),
        };
        let (reply_tx, reply_rx) = mpsc::channel();
        let request = match msg {
            WireMessage::Fetch => Request::Fetch(reply_tx),
            WireMessage::PushElastic(v) | WireMessage::PushGrad(v) => {
                if v.len() != dim {
                    let e = Error::Dimension { expected: dim, got: v.len() };
                    let _ = write_message(&mut stream, &WireMessage::Error(e.to_string()));
                    return Err(e);
                }
                Request::Push(v, reply_tx)
            }
            WireMessage::Shutdown => {
                let _ = tx.send(Request::WorkerDone);
                write_message(&mut stream, &WireMessage::Ack)?;
                return Ok(());
            }
            other => {
                let e = Error::protocol(format!("unexpected {} from a worker", other.name()));
                let _ = write_message(&mut stream, &WireMessage::Error(e.to_string()));
                return Err(e);
            }
        };
        tx.send(request).map_err(|_| Error::protocol("center stopped"))?;
        let reply = reply_rx.recv().map_err(|_| Error::protocol("center stopped"))?;
        write_message(&mut stream, &reply)?;
    }
}
