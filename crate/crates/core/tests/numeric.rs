use elastic_opt::numeric::{eigenvalues, lyapunov_stationary, spectral_radius, DenseMatrix, Rng};
use proptest::prelude::*;

fn random_matrix(seed: u64, n: usize, scale: f64) -> DenseMatrix {
    let mut rng = Rng::new(seed);
    DenseMatrix::new(n, n, (0..n * n).map(|_| scale * rng.uniform_range(-1.0, 1.0)).collect()).unwrap()
}

fn reference_eigenvalues(m: &DenseMatrix) -> Vec<(f64, f64)> {
    let n = m.rows();
    let a = nalgebra::DMatrix::from_row_slice(n, n, m.as_slice());
    let mut ev: Vec<(f64, f64)> = a.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn eigenvalues_match_reference(seed in any::<u64>(), n in 1usize..=9, scale in 0.01f64..10.0) {
        let m = random_matrix(seed, n, scale);
        let mut ours: Vec<(f64, f64)> = eigenvalues(&m, 1e-14).unwrap().iter().map(|e| (e.re, e.im)).collect();
        ours.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let reference = reference_eigenvalues(&m);
        prop_assert_eq!(ours.len(), reference.len());
        let tol = 1e-9 * (1.0 + m.norm_inf());
        for (a, b) in ours.iter().zip(&reference) {
            prop_assert!((a.0 - b.0).hypot(a.1 - b.1) <= tol, "{:?} vs {:?}", a, b);
        }
        let r = spectral_radius(&m, 1e-14).unwrap();
        let r_ref = reference.iter().map(|z| z.0.hypot(z.1)).fold(0.0, f64::max);
        prop_assert!((r - r_ref).abs() <= tol);
    }

    #[test]
    fn lyapunov_fixed_point_residual(seed in any::<u64>(), n in 1usize..=6) {
        let mut m = random_matrix(seed, n, 1.0);
        let r = spectral_radius(&m, 1e-14).unwrap();
        m = m.scale(0.9 / r.max(1e-3));
        let g = random_matrix(seed ^ 1, n, 1.0);
        let q = g.matmul(&g.transpose()).unwrap();
        let s = lyapunov_stationary(&m, &q, 1e-13, 1_000_000).unwrap();
        let residual = m.matmul(&s).unwrap().matmul(&m.transpose()).unwrap().add(&q).unwrap().sub(&s).unwrap();
        prop_assert!(residual.norm_inf() <= 1e-11 * (1.0 + q.max_abs()));
        prop_assert!(s.is_symmetric(0.0));
    }
}

#[test]
fn defective_and_repeated_eigenvalues() {
    let jordan = DenseMatrix::from_rows(&[vec![0.5, 1.0], vec![0.0, 0.5]]).unwrap();
    assert!((spectral_radius(&jordan, 1e-14).unwrap() - 0.5).abs() < 1e-7);
    let scaled = DenseMatrix::identity(5).scale(-0.75);
    assert!((spectral_radius(&scaled, 1e-14).unwrap() - 0.75).abs() < 1e-15);
}
