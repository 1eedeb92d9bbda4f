use std::io::Write;
use std::net::TcpStream;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use elastic_opt::algorithms::{Algorithm, HyperParams};
use elastic_opt::net::{
    read_message, run_worker, write_message, CenterConfig, CenterServer, RetryPolicy, WireMessage, WorkerConfig,
};
use elastic_opt::numeric::{GradientOracle, ParamVector, Rng};
use elastic_opt::problems::make_quadratic;
use elastic_opt::sim::{run_sim, Schedule, ScheduleKind, SimConfig};
use elastic_opt::Error;

fn start_center(
    initial: ParamVector,
    workers: usize,
) -> (String, thread::JoinHandle<elastic_opt::Result<elastic_opt::net::CenterReport>>) {
    let server = CenterServer::bind(CenterConfig::new("127.0.0.1:0", initial, workers)).unwrap();
    let addr = server.local_addr().unwrap().to_string();
    (addr, thread::spawn(move || server.run()))
}

fn request(stream: &mut TcpStream, msg: &WireMessage) -> WireMessage {
    write_message(stream, msg).unwrap();
    read_message(stream).unwrap().unwrap()
}

fn quadratic() -> Arc<dyn GradientOracle> {
    Arc::new(make_quadratic(6, 10.0, 0.5, 17).unwrap())
}

fn single_worker_matches_simulator(algorithm: Algorithm, delta: f64) {
    let problem = quadratic();
    let hp = HyperParams::from_alpha(0.05, 0.02, 10, 1, delta).unwrap();
    let mut sim_cfg = SimConfig::new(algorithm, hp, problem.clone(), Schedule::new(ScheduleKind::RoundRobin), 2000);
    sim_cfg.seed = 42;
    let sim = run_sim(sim_cfg).unwrap();

    let (addr, center) = start_center(problem.initial_point(42), 1);
    let mut wcfg = WorkerConfig::new(algorithm, hp, problem, 0, 2000);
    wcfg.seed = 42;
    let report = run_worker(&addr, &wcfg).unwrap();
    let center = center.join().unwrap().unwrap();

    for (a, b) in report.state.x.as_slice().iter().zip(sim.workers[0].x.as_slice()) {
        assert!((a - b).abs() <= 1e-9, "{}: {a} vs {b}", algorithm.as_str());
    }
    for (a, b) in center.center.x_tilde.as_slice().iter().zip(sim.center.x_tilde.as_slice()) {
        assert!((a - b).abs() <= 1e-9, "{}: {a} vs {b}", algorithm.as_str());
    }
    assert_eq!(center.pushes, report.pushes);
    assert_eq!(center.center.version, sim.center.version);
}

#[test]
fn easgd_worker_matches_simulator() {
    single_worker_matches_simulator(Algorithm::EasgdAsync, 0.0);
}

#[test]
fn eamsgd_worker_matches_simulator() {
    single_worker_matches_simulator(Algorithm::Eamsgd, 0.9);
}

#[test]
fn downpour_worker_matches_simulator() {
    single_worker_matches_simulator(Algorithm::Downpour, 0.0);
}

#[test]
fn fresh_fetch_and_zero_push() {
    let (addr, center) = start_center(ParamVector::zeros(3), 1);
    let mut s = TcpStream::connect(&addr).unwrap();
    assert_eq!(request(&mut s, &WireMessage::Fetch), WireMessage::FetchReply { version: 0, x: vec![0.0; 3] });
    assert_eq!(request(&mut s, &WireMessage::PushElastic(vec![0.0; 3])), WireMessage::Ack);
    assert_eq!(request(&mut s, &WireMessage::Fetch), WireMessage::FetchReply { version: 1, x: vec![0.0; 3] });
    assert_eq!(request(&mut s, &WireMessage::Shutdown), WireMessage::Ack);
    let report = center.join().unwrap().unwrap();
    assert_eq!(report.pushes, 1);
}

#[test]
fn opposite_pushes_cancel() {
    let init = ParamVector::new(vec![1.0, -2.0]).unwrap();
    let (addr, center) = start_center(init.clone(), 2);
    let e = [0.25, 3.5];
    let handles: Vec<_> = [1.0, -1.0]
        .into_iter()
        .map(|sign| {
            let addr = addr.clone();
            let v: Vec<f64> = e.iter().map(|x| sign * x).collect();
            thread::spawn(move || {
                let mut s = TcpStream::connect(&addr).unwrap();
                assert_eq!(request(&mut s, &WireMessage::PushElastic(v)), WireMessage::Ack);
                request(&mut s, &WireMessage::Shutdown);
            })
        })
        .collect();
    handles.into_iter().for_each(|h| h.join().unwrap());
    let report = center.join().unwrap().unwrap();
    assert_eq!(report.center.x_tilde, init);
    assert_eq!(report.center.version, 2);
}

#[test]
fn concurrent_pushes_sum_exactly_once() {
    let dim = 5;
    let (addr, center) = start_center(ParamVector::zeros(dim), 8);
    let handles: Vec<_> = (0..8)
        .map(|w| {
            let addr = addr.clone();
            thread::spawn(move || {
                let mut rng = Rng::new(100 + w);
                let mut s = TcpStream::connect(&addr).unwrap();
                let mut total = vec![0.0; dim];
                for _ in 0..200 {
                    let e: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
                    total.iter_mut().zip(&e).for_each(|(t, x)| *t += x);
                    assert_eq!(request(&mut s, &WireMessage::PushElastic(e)), WireMessage::Ack);
                }
                request(&mut s, &WireMessage::Shutdown);
                total
            })
        })
        .collect();
    let totals: Vec<Vec<f64>> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    let report = center.join().unwrap().unwrap();
    assert_eq!(report.center.version, 1600);
    for k in 0..dim {
        let expected: f64 = totals.iter().map(|t| t[k]).sum();
        assert!((report.center.x_tilde[k] - expected).abs() < 1e-9);
    }
}

#[test]
fn malformed_frames_get_error_replies() {
    let (addr, center) = start_center(ParamVector::zeros(2), 1);
    let mut s = TcpStream::connect(&addr).unwrap();
    assert!(matches!(request(&mut s, &WireMessage::PushElastic(vec![1.0])), WireMessage::Error(_)));
    assert_eq!(read_message(&mut s).unwrap(), None);

    let mut s = TcpStream::connect(&addr).unwrap();
    s.write_all(b"XXXX\x01\x01\0\0\0\0").unwrap();
    assert!(matches!(read_message(&mut s).unwrap(), Some(WireMessage::Error(_))));

    let mut s = TcpStream::connect(&addr).unwrap();
    assert!(matches!(request(&mut s, &WireMessage::Ack), WireMessage::Error(_)));

    let mut s = TcpStream::connect(&addr).unwrap();
    assert_eq!(request(&mut s, &WireMessage::Shutdown), WireMessage::Ack);
    assert_eq!(center.join().unwrap().unwrap().center.version, 0);
}

#[test]
fn zero_alpha_never_touches_center() {
    let problem = quadratic();
    let hp = HyperParams::from_alpha(0.05, 0.0, 3, 1, 0.0).unwrap();
    let (addr, center) = start_center(problem.initial_point(0), 1);
    let report = run_worker(&addr, &WorkerConfig::new(Algorithm::EasgdAsync, hp, problem.clone(), 0, 50)).unwrap();
    let center = center.join().unwrap().unwrap();
    assert_eq!(report.pushes, 0);
    assert_eq!(report.fetches, 0);
    assert_eq!(center.center.version, 0);
    assert_eq!(center.center.x_tilde, problem.initial_point(0));
}

#[test]
fn long_period_communicates_once() {
    let problem = quadratic();
    let hp = HyperParams::from_alpha(0.05, 0.1, 100, 1, 0.0).unwrap();
    let (addr, center) = start_center(problem.initial_point(0), 1);
    let report = run_worker(&addr, &WorkerConfig::new(Algorithm::EasgdAsync, hp, problem, 0, 40)).unwrap();
    center.join().unwrap().unwrap();
    assert_eq!(report.pushes, 1);
}

#[test]
fn unreachable_center_aborts_after_retries() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    drop(listener);
    let hp = HyperParams::from_alpha(0.05, 0.01, 1, 1, 0.0).unwrap();
    let mut cfg = WorkerConfig::new(Algorithm::EasgdAsync, hp, quadratic(), 0, 10);
    cfg.retry = RetryPolicy { initial: Duration::from_millis(1), max: Duration::from_millis(4), attempts: 3 };
    match run_worker(&addr, &cfg) {
        Err(Error::WorkerAbort { step, .. }) => assert_eq!(step, 0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn threshold_stops_workers() {
    let problem = quadratic();
    let hp = HyperParams::from_alpha(0.05, 0.02, 1, 2, 0.0).unwrap();
    let opt_loss = problem.exact_loss(problem.optimum().unwrap()).unwrap();
    let start_loss = problem.exact_loss(&problem.initial_point(0)).unwrap();
    let mut cfg = CenterConfig::new("127.0.0.1:0", problem.initial_point(0), 2);
    cfg.objective = Some(problem.clone());
    cfg.stop_threshold = Some(opt_loss + 0.5 * (start_loss - opt_loss));
    let server = CenterServer::bind(cfg).unwrap();
    let addr = server.local_addr().unwrap().to_string();
    let center = thread::spawn(move || server.run());
    let workers: Vec<_> = (0..2)
        .map(|id| {
            let mut w = WorkerConfig::new(Algorithm::EasgdAsync, hp, problem.clone(), id, 1_000_000);
            w.grad_sleep = Duration::from_micros(50);
            let addr = addr.clone();
            thread::spawn(move || run_worker(&addr, &w).unwrap())
        })
        .collect();
    let reports: Vec<_> = workers.into_iter().map(|h| h.join().unwrap()).collect();
    let center = center.join().unwrap().unwrap();
    assert!(reports.iter().all(|r| r.stopped_by_center));
    assert!(center.threshold_reached_s.is_some());
    assert_eq!(center.pushes, reports.iter().map(|r| r.pushes).sum::<u64>());
    assert!(center.metrics.iter().all(|m| m.worker_id == -1));
}
