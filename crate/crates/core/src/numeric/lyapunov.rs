use crate::error::{check_dims, Error, Result};
use crate::numeric::{spectral_radius, DenseMatrix};

/// Stationary covariance of `x+ = M x + noise` with noise covariance `Q`.
///
/// Runs the fixed-point iteration `S_0 = 0`, `S_{k+1} = M S_k M^T + Q` and
/// returns the first iterate whose residual `||S - (M S M^T + Q)||_inf` is at
/// most `tol`. Each iterate is symmetrized.
pub fn lyapunov_stationary(m: &DenseMatrix, q: &DenseMatrix, tol: f64, max_iter: usize) -> Result<DenseMatrix> {
    if !m.is_square() || !q.is_square() {
        return Err(Error::config("lyapunov operands must be square"));
    }
    check_dims(m.rows(), q.rows())?;
    if !q.is_symmetric(1e-12 * q.max_abs().max(1.0)) {
        return Err(Error::config("noise covariance must be symmetric"));
    }
    if q.diagonal().iter().any(|d| *d < 0.0) {
        return Err(Error::config("noise covariance has a negative diagonal entry"));
    }
    let radius = spectral_radius(m, 1e-14)?;
    if radius >= 1.0 {
        return Err(Error::UnstableSystem { radius });
    }
    let mt = m.transpose();
    let mut sigma = DenseMatrix::zeros(m.rows(), m.cols());
    for _ in 0..max_iter {
        let mut next = m.matmul(&sigma)?.matmul(&mt)?.add(q)?;
        next.symmetrize();
        if !next.is_finite() {
            return Err(Error::numerics("non-finite covariance iterate"));
        }
        let residual = next.sub(&sigma)?.norm_inf();
        if residual <= tol {
            return Ok(sigma);
        }
        sigma = next;
    }
    Err(Error::numerics(format!("lyapunov iteration did not reach residual {tol} in {max_iter} iterations")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> DenseMatrix {
        DenseMatrix::new(1, 1, vec![v]).unwrap()
    }

    #[test]
    fn memoryless() {
        let s = lyapunov_stationary(&scalar(0.0), &scalar(2.5), 1e-14, 10).unwrap();
        assert_eq!(s[(0, 0)], 2.5);
    }

    #[test]
    fn scalar_geometric_series() {
        let (a, q) = (0.8, 0.3);
        let s = lyapunov_stationary(&scalar(a), &scalar(q), 1e-15, 10_000).unwrap();
        assert!((s[(0, 0)] - q / (1.0 - a * a)).abs() < 1e-13);
    }

    #[test]
    fn diagonal_blocks() {
        let m = DenseMatrix::diag(&[0.5, 0.0]).unwrap();
        let s = lyapunov_stationary(&m, &DenseMatrix::identity(2), 1e-15, 1000).unwrap();
        assert!((s[(0, 0)] - 4.0 / 3.0).abs() < 1e-14);
        assert!((s[(1, 1)] - 1.0).abs() < 1e-15);
        assert_eq!(s[(0, 1)], 0.0);
    }

    #[test]
    fn unstable_is_rejected() {
        let err = lyapunov_stationary(&scalar(1.0), &scalar(1.0), 1e-12, 10).unwrap_err();
        assert!(matches!(err, Error::UnstableSystem { .. }));
    }

    #[test]
    fn iteration_budget() {
        let err = lyapunov_stationary(&scalar(0.99), &scalar(1.0), 1e-15, 5).unwrap_err();
        assert!(matches!(err, Error::Numerics(_)));
    }

    #[test]
    fn residual_and_symmetry_on_coupled_map() {
        let m = DenseMatrix::from_rows(&[vec![0.4, 0.3, 0.0], vec![-0.2, 0.5, 0.1], vec![0.05, 0.0, 0.7]]).unwrap();
        let q = DenseMatrix::from_rows(&[vec![1.0, 0.2, 0.0], vec![0.2, 0.5, 0.1], vec![0.0, 0.1, 0.3]]).unwrap();
        let tol = 1e-12;
        let s = lyapunov_stationary(&m, &q, tol, 100_000).unwrap();
        let residual = s.sub(&m.matmul(&s).unwrap().matmul(&m.transpose()).unwrap().add(&q).unwrap()).unwrap();
        assert!(residual.norm_inf() <= tol);
        assert!(s.is_symmetric(1e-10));
    }
}
