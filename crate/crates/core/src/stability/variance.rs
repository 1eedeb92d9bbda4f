use crate::error::{Error, Result};
use crate::numeric::{lyapunov_stationary, DenseMatrix};
use crate::stability::{build_round_map, MapAlgorithm, RoundMapSpec};

const MAX_LYAPUNOV_ITERATIONS: usize = 5_000_000;

/// Stationary covariance of the stacked state when every gradient carries
/// independent `N(0, sigma^2)` noise.
pub fn stationary_covariance(spec: &RoundMapSpec, sigma: f64) -> Result<DenseMatrix> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::config(format!("sigma must be nonnegative, got {sigma}")));
    }
    if spec.algorithm == MapAlgorithm::AdmmRr {
        return Err(Error::config("no noise model for admm_rr"));
    }
    let map = build_round_map(spec)?;
    let radius = map.spectral_radius()?;
    if radius >= 1.0 {
        return Err(Error::UnstableSystem { radius });
    }
    let q = map.noise_covariance(sigma);
    let n = map.dim();
    if q.max_abs() == 0.0 {
        return Ok(DenseMatrix::zeros(n, n));
    }
    let tol = 1e-15 * q.max_abs() * (1.0 - radius);
    lyapunov_stationary(&map.matrix, &q, tol, MAX_LYAPUNOV_ITERATIONS)
}

/// Diagonal of [`stationary_covariance`], one entry per stacked coordinate.
pub fn stationary_variance(spec: &RoundMapSpec, sigma: f64) -> Result<Vec<f64>> {
    Ok(stationary_covariance(spec, sigma)?.diagonal())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_is_zero() {
        let spec = RoundMapSpec::new(MapAlgorithm::EasgdSync, 3, 1.0, 0.1, 0.5);
        assert!(stationary_variance(&spec, 0.0).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sgd_closed_form() {
        for (eta, h, sigma) in [(0.1, 1.0, 1.0), (0.5, 2.0, 0.3), (1.9, 1.0, 2.0)] {
            let spec = RoundMapSpec::new(MapAlgorithm::Sgd, 1, h, eta, 0.0);
            let v = stationary_variance(&spec, sigma).unwrap()[0];
            let a: f64 = 1.0 - eta * h;
            let exact = eta * eta * sigma * sigma / (1.0 - a * a);
            assert!((v - exact).abs() <= 1e-10 * exact, "{v} vs {exact}");
        }
    }

    #[test]
    fn center_fluctuates_less_than_worker() {
        for alpha in [0.1, 0.3, 0.5, 0.7, 0.8] {
            let spec = RoundMapSpec::new(MapAlgorithm::EasgdSync, 1, 1.0, 0.5, alpha / 0.5);
            let v = stationary_variance(&spec, 1.0).unwrap();
            assert!(v[1] <= v[0], "alpha={alpha}: {v:?}");
        }
        let beyond = RoundMapSpec::new(MapAlgorithm::EasgdSync, 1, 1.0, 0.5, 0.9 / 0.5);
        assert!(matches!(stationary_variance(&beyond, 1.0), Err(Error::UnstableSystem { .. })));
    }

    #[test]
    fn unstable_and_admm_rejected() {
        let unstable = RoundMapSpec::new(MapAlgorithm::Sgd, 1, 1.0, 2.5, 0.0);
        assert!(matches!(stationary_variance(&unstable, 1.0), Err(Error::UnstableSystem { .. })));
        let admm = RoundMapSpec::new(MapAlgorithm::AdmmRr, 1, 1.0, 0.1, 0.5);
        assert!(matches!(stationary_variance(&admm, 1.0), Err(Error::Config(_))));
    }
}
