use std::ffi::{CStr, CString};
use std::ptr;

use elastic_opt_ffi::*;

fn last_error() -> String {
    let p = eo_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { eo_string_free(p) };
    s
}

#[test]
fn spectral_radius_and_lyapunov() {
    let m = [-0.5, 0.5, 0.5, 0.5];
    let mut r = 0.0;
    assert_eq!(unsafe { eo_spectral_radius(m.as_ptr(), 2, &mut r) }, EoStatus::Ok);
    assert!((r - 0.5f64.sqrt()).abs() < 1e-12);

    let m = [0.5, 0.0, 0.0, 0.0];
    let q = [1.0, 0.0, 0.0, 1.0];
    let mut s = [0.0; 4];
    assert_eq!(
        unsafe { eo_lyapunov_stationary(m.as_ptr(), q.as_ptr(), 2, 1e-14, 10_000, s.as_mut_ptr()) },
        EoStatus::Ok
    );
    assert!((s[0] - 4.0 / 3.0).abs() < 1e-12 && (s[3] - 1.0).abs() < 1e-12 && s[1] == 0.0);

    let unstable = [2.0];
    let one = [1.0];
    let status = unsafe { eo_lyapunov_stationary(unstable.as_ptr(), one.as_ptr(), 1, 1e-12, 10, s.as_mut_ptr()) };
    assert_eq!(status, EoStatus::Unstable);
    assert!(last_error().contains("spectral radius"));
}

#[test]
fn round_map_lifecycle() {
    let alg = CString::new("easgd_sync").unwrap();
    let mut map = ptr::null_mut();
    assert_eq!(unsafe { eo_round_map_new(alg.as_ptr(), 1, 1.0, 0.1, 1.0, 0.0, 1, &mut map) }, EoStatus::Ok);
    assert_eq!(unsafe { eo_round_map_dim(map) }, 2);

    let mut m = [0.0; 4];
    assert_eq!(unsafe { eo_round_map_matrix(map, m.as_mut_ptr(), 4) }, EoStatus::Ok);
    let expected = [1.0 - 0.1 - 0.1, 0.1, 0.1, 0.9];
    for (a, b) in m.iter().zip(expected) {
        assert!((a - b).abs() < 1e-15);
    }
    let mut small = [0.0; 3];
    assert_eq!(unsafe { eo_round_map_matrix(map, small.as_mut_ptr(), 3) }, EoStatus::BufferTooSmall);

    let mut state = [1.0, 0.0];
    assert_eq!(unsafe { eo_round_map_apply(map, state.as_mut_ptr(), 2, 1) }, EoStatus::Ok);
    assert!((state[0] - 0.8).abs() < 1e-15 && (state[1] - 0.1).abs() < 1e-15);
    assert_eq!(unsafe { eo_round_map_apply(map, state.as_mut_ptr(), 1, 1) }, EoStatus::Dimension);

    let mut r = 0.0;
    assert_eq!(unsafe { eo_round_map_spectral_radius(map, &mut r) }, EoStatus::Ok);
    assert!(r < 1.0);
    let mut var = [0.0; 2];
    assert_eq!(unsafe { eo_round_map_stationary_variance(map, 1.0, var.as_mut_ptr(), 2) }, EoStatus::Ok);
    assert!(var[1] <= var[0] && var[1] > 0.0);
    unsafe { eo_round_map_free(map) };

    let sgd = CString::new("sgd").unwrap();
    let mut sgd_map = ptr::null_mut();
    assert_eq!(unsafe { eo_round_map_new(sgd.as_ptr(), 1, 1.0, 0.3, 0.0, 0.0, 1, &mut sgd_map) }, EoStatus::Ok);
    let mut v = [0.0];
    assert_eq!(unsafe { eo_round_map_stationary_variance(sgd_map, 2.0, v.as_mut_ptr(), 1) }, EoStatus::Ok);
    let closed = 0.09 * 4.0 / (1.0 - 0.49);
    assert!((v[0] - closed).abs() / closed < 1e-10);
    unsafe { eo_round_map_free(sgd_map) };
}

#[test]
fn bad_arguments_report_status_and_message() {
    let bogus = CString::new("adam").unwrap();
    let mut map = ptr::null_mut();
    assert_eq!(unsafe { eo_round_map_new(bogus.as_ptr(), 1, 1.0, 0.1, 1.0, 0.0, 1, &mut map) }, EoStatus::Config);
    assert!(last_error().contains("adam"));
    assert!(map.is_null());
    assert_eq!(unsafe { eo_round_map_new(ptr::null(), 1, 1.0, 0.1, 1.0, 0.0, 1, &mut map) }, EoStatus::NullPointer);
    assert_eq!(unsafe { eo_round_map_spectral_radius(ptr::null(), ptr::null_mut()) }, EoStatus::NullPointer);
    assert_eq!(unsafe { eo_round_map_dim(ptr::null()) }, 0);
    unsafe { eo_round_map_free(ptr::null_mut()) };
    let mut r = 0.0;
    assert_eq!(unsafe { eo_spectral_radius(ptr::null(), 2, &mut r) }, EoStatus::NullPointer);
}

#[test]
fn stability_scan() {
    let alg = CString::new("easgd_sync").unwrap();
    let eta = [0.5, 1.0, 1.9];
    let alpha = [0.1, 0.5, 0.9];
    let mut grid = ptr::null_mut();
    let status = unsafe { eo_scan_stability(alg.as_ptr(), 1, eta.as_ptr(), 3, alpha.as_ptr(), 3, &mut grid) };
    assert_eq!(status, EoStatus::Ok);
    let mut radii = [0.0; 9];
    assert_eq!(unsafe { eo_stability_grid_radii(grid, radii.as_mut_ptr(), 9) }, EoStatus::Ok);
    assert!((radii[4] - 0.5f64.sqrt()).abs() < 1e-12);
    let unstable = unsafe { eo_stability_grid_unstable_count(grid) };
    let jury = eta
        .iter()
        .flat_map(|e| alpha.iter().map(move |a| 4.0 - 2.0 * e - 4.0 * a + e * a))
        .filter(|m| *m < 0.0)
        .count();
    assert_eq!(unstable, jury);
    let mut csv = ptr::null_mut();
    assert_eq!(unsafe { eo_stability_grid_csv(grid, &mut csv) }, EoStatus::Ok);
    let csv = take_string(csv);
    assert_eq!(csv.lines().count(), 10);
    assert!(csv.starts_with("eta_h,alpha,radius,stable\n"));
    unsafe { eo_stability_grid_free(grid) };

    let status = unsafe { eo_scan_stability(alg.as_ptr(), 1, eta.as_ptr(), 0, alpha.as_ptr(), 3, &mut grid) };
    assert_eq!(status, EoStatus::InvalidArgument);
}

#[test]
fn simulation_from_config_text() {
    let cfg = CString::new("algorithm=easgd_sync\np=2\neta=0.1\nalpha=0.05\ndim=3\nsteps=500\n").unwrap();
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { eo_sim_run(cfg.as_ptr(), &mut res) }, EoStatus::Ok);
    assert_eq!(unsafe { eo_sim_dim(res) }, 3);
    assert_eq!(unsafe { eo_sim_num_workers(res) }, 2);
    assert_eq!(unsafe { eo_sim_center_version(res) }, 500);
    let mut c = [0.0; 3];
    let mut w = [0.0; 3];
    assert_eq!(unsafe { eo_sim_center(res, c.as_mut_ptr(), 3) }, EoStatus::Ok);
    assert_eq!(unsafe { eo_sim_worker(res, 1, w.as_mut_ptr(), 3) }, EoStatus::Ok);
    assert!(c.iter().zip(&w).all(|(a, b)| (a - b).abs() < 1e-6));
    assert_eq!(unsafe { eo_sim_worker(res, 2, w.as_mut_ptr(), 3) }, EoStatus::InvalidArgument);

    let mut text = ptr::null_mut();
    assert_eq!(unsafe { eo_sim_metrics_csv(res, &mut text) }, EoStatus::Ok);
    assert!(take_string(text).starts_with("wall_clock_s,"));
    assert_eq!(unsafe { eo_sim_events(res, &mut text) }, EoStatus::Ok);
    assert_eq!(take_string(text).lines().count(), 2 * 2 * 500);
    unsafe { eo_sim_result_free(res) };

    let diverging = CString::new("algorithm=sgd\nproblem=scalar_quadratic\nb=1\neta=3\nsteps=1000\n").unwrap();
    assert_eq!(unsafe { eo_sim_run(diverging.as_ptr(), &mut res) }, EoStatus::Diverged);
    let bad = CString::new("foo=1\n").unwrap();
    assert_eq!(unsafe { eo_sim_run(bad.as_ptr(), &mut res) }, EoStatus::Config);
    assert!(last_error().contains("foo"));
}

#[test]
fn header_declares_every_export() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let header = std::fs::read_to_string(format!("{dir}/include/elastic_opt.h")).unwrap();
    let source = std::fs::read_to_string(format!("{dir}/src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() > 20);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("EO_STATUS_OK = 0"));
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(eo_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
