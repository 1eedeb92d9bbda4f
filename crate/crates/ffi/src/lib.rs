//! C ABI over the elastic-opt workbench.
//!
//! Every fallible function returns an [`EoStatus`]. On failure the message is
//! kept per thread and can be read with [`eo_last_error_message`]. Objects are
//! handed out as opaque handles and must be released with the matching
//! `*_free` function. Matrices are dense and row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use elastic_opt::cli::ExperimentConfig;
use elastic_opt::metrics::metrics_to_csv;
use elastic_opt::numeric::{lyapunov_stationary, spectral_radius, DenseMatrix};
use elastic_opt::sim::{events_to_text, run_sim, SimOutput};
use elastic_opt::stability::{
    build_round_map, scan_stability, stationary_variance, LinearMap, MapAlgorithm, RoundMapSpec, StabilityGrid,
};
use elastic_opt::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    Config = 4,
    Dimension = 5,
    Numerics = 6,
    Unstable = 7,
    Diverged = 8,
    Parse = 9,
    Io = 10,
    Other = 11,
    Panic = 12,
}

impl From<&Error> for EoStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Config(_) => EoStatus::Config,
            Error::Dimension { .. } => EoStatus::Dimension,
            Error::Numerics(_) => EoStatus::Numerics,
            Error::UnstableSystem { .. } => EoStatus::Unstable,
            Error::Diverged { .. } => EoStatus::Diverged,
            Error::Parse { .. } => EoStatus::Parse,
            Error::Io(_) => EoStatus::Io,
            _ => EoStatus::Other,
        }
    }
}

/// A failure inside the wrapper: a status plus message.
struct Failure(EoStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(EoStatus::from(&e), e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EoStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside elastic-opt".into());
            EoStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(EoStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(EoStatus::InvalidArgument, msg.into())
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, needed: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len < needed {
        return Err(Failure(EoStatus::BufferTooSmall, format!("{what} holds {len} values, {needed} needed")));
    }
    if needed == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

unsafe fn handle<'a, T>(h: *const T, what: &str) -> Result<&'a T, Failure> {
    h.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn square(data: &[f64], n: usize) -> Result<DenseMatrix, Failure> {
    Ok(DenseMatrix::new(n, n, data.to_vec())?)
}

/// Message of the last failed call on this thread, or null when there was
/// none. The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn eo_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn eo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn eo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s).map(CString::into_raw).map_err(|_| invalid("output contains NUL"))
}

/// Largest eigenvalue modulus of the `n x n` matrix `m`.
///
/// # Safety
/// `m` must point to `n * n` doubles and `out` to one.
#[no_mangle]
pub unsafe extern "C" fn eo_spectral_radius(m: *const f64, n: usize, out: *mut f64) -> EoStatus {
    guard(|| {
        let m = square(input(m, n * n, "m")?, n)?;
        put(out, spectral_radius(&m, 1e-14)?, "out")
    })
}

/// Stationary covariance `S = M S M^T + Q` by fixed-point iteration, written
/// to the `n x n` buffer `out`.
///
/// # Safety
/// `m`, `q` and `out` must each point to `n * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn eo_lyapunov_stationary(
    m: *const f64,
    q: *const f64,
    n: usize,
    tol: f64,
    max_iter: usize,
    out: *mut f64,
) -> EoStatus {
    guard(|| {
        let m = square(input(m, n * n, "m")?, n)?;
        let q = square(input(q, n * n, "q")?, n)?;
        let s = lyapunov_stationary(&m, &q, tol, max_iter)?;
        output(out, n * n, n * n, "out")?.copy_from_slice(s.as_slice());
        Ok(())
    })
}

/// Linear round map of one algorithm on the scalar quadratic.
pub struct EoRoundMap {
    map: LinearMap,
}

/// Builds the round map of `algorithm` (`easgd_sync`, `easgd_rr`, `admm_rr`,
/// `sgd` or `msgd`). `delta` is used by msgd and `tau` by easgd_rr.
///
/// # Safety
/// `algorithm` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eo_round_map_new(
    algorithm: *const c_char,
    p: usize,
    h: f64,
    eta: f64,
    rho: f64,
    delta: f64,
    tau: u64,
    out: *mut *mut EoRoundMap,
) -> EoStatus {
    guard(|| {
        let alg = MapAlgorithm::parse(text(algorithm, "algorithm")?)?;
        let mut spec = RoundMapSpec::new(alg, p, h, eta, rho);
        spec.delta = delta;
        spec.tau = tau;
        let map = build_round_map(&spec)?;
        put(out, Box::into_raw(Box::new(EoRoundMap { map })), "out")
    })
}

/// # Safety
/// `map` must come from [`eo_round_map_new`] and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn eo_round_map_free(map: *mut EoRoundMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Stacked state dimension of the map, or 0 for a null handle.
///
/// # Safety
/// `map` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eo_round_map_dim(map: *const EoRoundMap) -> usize {
    map.as_ref().map_or(0, |m| m.map.dim())
}

/// Copies the `dim x dim` matrix into `out`, which holds `len` doubles.
///
/// # Safety
/// `map` must be a live handle and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn eo_round_map_matrix(map: *const EoRoundMap, out: *mut f64, len: usize) -> EoStatus {
    guard(|| {
        let m = &handle(map, "map")?.map;
        let n = m.dim();
        output(out, len, n * n, "out")?.copy_from_slice(m.matrix.as_slice());
        Ok(())
    })
}

/// # Safety
/// `map` must be a live handle and `out` must point to one double.
#[no_mangle]
pub unsafe extern "C" fn eo_round_map_spectral_radius(map: *const EoRoundMap, out: *mut f64) -> EoStatus {
    guard(|| put(out, handle(map, "map")?.map.spectral_radius()?, "out"))
}

/// Advances `state` (length `len`, equal to the map dimension) by `rounds` rounds in place.
///
/// # Safety
/// `map` must be a live handle and `state` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn eo_round_map_apply(
    map: *const EoRoundMap,
    state: *mut f64,
    len: usize,
    rounds: usize,
) -> EoStatus {
    guard(|| {
        let m = &handle(map, "map")?.map;
        if len != m.dim() {
            return Err(Error::Dimension { expected: m.dim(), got: len }.into());
        }
        let s = output(state, len, len, "state")?;
        let next = m.apply(s, rounds)?;
        s.copy_from_slice(&next);
        Ok(())
    })
}

/// Stationary per-coordinate variance under gradient noise `sigma`, written
/// to `out` (at least `dim` doubles).
///
/// # Safety
/// `map` must be a live handle and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn eo_round_map_stationary_variance(
    map: *const EoRoundMap,
    sigma: f64,
    out: *mut f64,
    len: usize,
) -> EoStatus {
    guard(|| {
        let m = &handle(map, "map")?.map;
        let var = stationary_variance(&m.spec, sigma)?;
        output(out, len, var.len(), "out")?.copy_from_slice(&var);
        Ok(())
    })
}

/// Spectral radii over an `eta_h x alpha` grid.
pub struct EoStabilityGrid {
    grid: StabilityGrid,
}

/// Scans `algorithm` with `p` workers over the given axes (`h = 1`).
///
/// # Safety
/// `algorithm` must be a NUL-terminated string, the axes must point to
/// `n_eta` and `n_alpha` doubles, and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn eo_scan_stability(
    algorithm: *const c_char,
    p: usize,
    eta_h: *const f64,
    n_eta: usize,
    alpha: *const f64,
    n_alpha: usize,
    out: *mut *mut EoStabilityGrid,
) -> EoStatus {
    guard(|| {
        let alg = MapAlgorithm::parse(text(algorithm, "algorithm")?)?;
        if n_eta == 0 || n_alpha == 0 {
            return Err(invalid("grid axes must be non-empty"));
        }
        let grid = scan_stability(alg, p, input(eta_h, n_eta, "eta_h")?, input(alpha, n_alpha, "alpha")?)?;
        put(out, Box::into_raw(Box::new(EoStabilityGrid { grid })), "out")
    })
}

/// # Safety
/// `grid` must come from [`eo_scan_stability`] and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn eo_stability_grid_free(grid: *mut EoStabilityGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Copies all radii, row-major over `eta_h`, into `out`.
///
/// # Safety
/// `grid` must be a live handle and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn eo_stability_grid_radii(grid: *const EoStabilityGrid, out: *mut f64, len: usize) -> EoStatus {
    guard(|| {
        let g = &handle(grid, "grid")?.grid;
        output(out, len, g.radius.len(), "out")?.copy_from_slice(&g.radius);
        Ok(())
    })
}

/// Number of cells whose radius is not below `1 - 1e-10`; 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eo_stability_grid_unstable_count(grid: *const EoStabilityGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.grid.unstable_count())
}

/// The grid as CSV (`eta_h,alpha,radius,stable`); free with [`eo_string_free`].
///
/// # Safety
/// `grid` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eo_stability_grid_csv(grid: *const EoStabilityGrid, out: *mut *mut c_char) -> EoStatus {
    guard(|| {
        let csv = handle(grid, "grid")?.grid.to_csv();
        put(out, into_c_string(csv)?, "out")
    })
}

/// Finished simulation.
pub struct EoSimResult {
    out: SimOutput,
}

/// Runs the simulator on a key=value config (the same format as the CLI;
/// `mode` and `output_dir` are ignored).
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eo_sim_run(config: *const c_char, out: *mut *mut EoSimResult) -> EoStatus {
    guard(|| {
        let cfg = ExperimentConfig::parse(text(config, "config")?)?;
        let result = run_sim(cfg.sim_config()?)?;
        put(out, Box::into_raw(Box::new(EoSimResult { out: result })), "out")
    })
}

/// # Safety
/// `result` must come from [`eo_sim_run`] and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn eo_sim_result_free(result: *mut EoSimResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Parameter dimension; 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eo_sim_dim(result: *const EoSimResult) -> usize {
    result.as_ref().map_or(0, |r| r.out.center.x_tilde.dim())
}

/// Worker count; 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eo_sim_num_workers(result: *const EoSimResult) -> usize {
    result.as_ref().map_or(0, |r| r.out.workers.len())
}

/// Final center version; 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eo_sim_center_version(result: *const EoSimResult) -> u64 {
    result.as_ref().map_or(0, |r| r.out.center.version)
}

/// Copies the final center into `out`.
///
/// # Safety
/// `result` must be a live handle and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn eo_sim_center(result: *const EoSimResult, out: *mut f64, len: usize) -> EoStatus {
    guard(|| {
        let c = &handle(result, "result")?.out.center.x_tilde;
        output(out, len, c.dim(), "out")?.copy_from_slice(c.as_slice());
        Ok(())
    })
}

/// Copies the final parameters of worker `index` into `out`.
///
/// # Safety
/// `result` must be a live handle and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn eo_sim_worker(
    result: *const EoSimResult,
    index: usize,
    out: *mut f64,
    len: usize,
) -> EoStatus {
    guard(|| {
        let r = &handle(result, "result")?.out;
        let w = r
            .workers
            .get(index)
            .ok_or_else(|| invalid(format!("worker {index} out of range for {} workers", r.workers.len())))?;
        output(out, len, w.x.dim(), "out")?.copy_from_slice(w.x.as_slice());
        Ok(())
    })
}

/// Metrics CSV of the run; free with [`eo_string_free`].
///
/// # Safety
/// `result` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eo_sim_metrics_csv(result: *const EoSimResult, out: *mut *mut c_char) -> EoStatus {
    guard(|| {
        let csv = metrics_to_csv(&handle(result, "result")?.out.metrics);
        put(out, into_c_string(csv)?, "out")
    })
}

/// Event log (`time,worker,kind,center_version` lines); free with [`eo_string_free`].
///
/// # Safety
/// `result` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eo_sim_events(result: *const EoSimResult, out: *mut *mut c_char) -> EoStatus {
    guard(|| {
        let log = events_to_text(&handle(result, "result")?.out.events);
        put(out, into_c_string(log)?, "out")
    })
}
