use crate::algorithms::{Algorithm, CommOrder};
use crate::error::{Error, Result};
use crate::numeric::{spectral_radius, DenseMatrix};

/// Tolerance handed to the eigenvalue solver for every round map.
pub const EIGEN_TOL: f64 = 1e-14;

/// Algorithms with an exact round map on `f(x) = h x^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapAlgorithm {
    EasgdSync,
    /// Round-robin EASGD: workers exchange with the center one at a time in index order.
    EasgdRr,
    AdmmRr,
    Sgd,
    Msgd,
}

impl MapAlgorithm {
    pub const ALL: [MapAlgorithm; 5] =
        [MapAlgorithm::EasgdSync, MapAlgorithm::EasgdRr, MapAlgorithm::AdmmRr, MapAlgorithm::Sgd, MapAlgorithm::Msgd];

    pub fn as_str(&self) -> &'static str {
        match self {
            MapAlgorithm::EasgdSync => "easgd_sync",
            MapAlgorithm::EasgdRr => "easgd_rr",
            MapAlgorithm::AdmmRr => "admm_rr",
            MapAlgorithm::Sgd => "sgd",
            MapAlgorithm::Msgd => "msgd",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        MapAlgorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::config(format!("no round map for algorithm {s:?}")))
    }

    /// The simulator algorithm whose noiseless trajectory the map reproduces.
    pub fn sim_algorithm(&self) -> Algorithm {
        match self {
            MapAlgorithm::EasgdSync => Algorithm::EasgdSync,
            MapAlgorithm::EasgdRr => Algorithm::EasgdAsync,
            MapAlgorithm::AdmmRr => Algorithm::AdmmRoundRobin,
            MapAlgorithm::Sgd => Algorithm::Sgd,
            MapAlgorithm::Msgd => Algorithm::Msgd,
        }
    }
}

/// Parameters of one round map. `sgd` and `msgd` describe a single worker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundMapSpec {
    pub algorithm: MapAlgorithm,
    pub p: usize,
    pub h: f64,
    pub eta: f64,
    pub rho: f64,
    pub delta: f64,
    pub tau: u64,
    pub comm_order: CommOrder,
}

impl RoundMapSpec {
    pub fn new(algorithm: MapAlgorithm, p: usize, h: f64, eta: f64, rho: f64) -> Self {
        RoundMapSpec { algorithm, p, h, eta, rho, delta: 0.0, tau: 1, comm_order: CommOrder::Before }
    }

    pub fn alpha(&self) -> f64 {
        self.eta * self.rho
    }

    /// Length of the stacked state the map acts on.
    pub fn state_dim(&self) -> usize {
        match self.algorithm {
            MapAlgorithm::EasgdSync | MapAlgorithm::EasgdRr => self.p + 1,
            MapAlgorithm::AdmmRr => 2 * self.p + 1,
            MapAlgorithm::Msgd => 2,
            MapAlgorithm::Sgd => 1,
        }
    }

    /// Simulator local steps per worker covered by one map application:
    /// `tau` for round-robin EASGD, one otherwise.
    pub fn steps_per_round(&self) -> u64 {
        match self.algorithm {
            MapAlgorithm::EasgdRr => self.tau,
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.h, self.eta, self.rho, self.delta].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("round map parameters must be finite"));
        }
        if !(self.h > 0.0) {
            return Err(Error::config(format!("h must be positive, got {}", self.h)));
        }
        if self.eta < 0.0 || self.rho < 0.0 {
            return Err(Error::config("eta and rho must be nonnegative"));
        }
        if self.p == 0 {
            return Err(Error::config("p must be at least 1"));
        }
        if self.tau == 0 {
            return Err(Error::config("tau must be at least 1"));
        }
        if matches!(self.algorithm, MapAlgorithm::Sgd | MapAlgorithm::Msgd) && self.p != 1 {
            return Err(Error::config(format!("{} maps describe one worker; p must be 1", self.algorithm.as_str())));
        }
        if self.algorithm == MapAlgorithm::Msgd && !(0.0..1.0).contains(&self.delta) {
            return Err(Error::config(format!("delta must lie in [0, 1), got {}", self.delta)));
        }
        if self.tau != 1 && self.algorithm != MapAlgorithm::EasgdRr {
            return Err(Error::config("tau > 1 is only modeled for easgd_rr"));
        }
        Ok(())
    }
}

/// One round as a matrix, together with the directions through which unit
/// gradient noise enters the state during the round.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    pub spec: RoundMapSpec,
    pub matrix: DenseMatrix,
    /// One column per scalar noise draw, already propagated to the end of the
    /// round and scaled for `sigma = 1`.
    pub noise_gains: Vec<Vec<f64>>,
}

impl LinearMap {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        spectral_radius(&self.matrix, EIGEN_TOL)
    }

    /// `Q = sigma^2 sum_j g_j g_j^T`, the noise covariance added per round.
    pub fn noise_covariance(&self, sigma: f64) -> DenseMatrix {
        let n = self.dim();
        let mut q = DenseMatrix::zeros(n, n);
        for g in &self.noise_gains {
            for i in 0..n {
                for j in 0..n {
                    q[(i, j)] += sigma * sigma * g[i] * g[j];
                }
            }
        }
        q
    }

    /// `M^k state`.
    pub fn apply(&self, state: &[f64], rounds: usize) -> Result<Vec<f64>> {
        let mut s = state.to_vec();
        for _ in 0..rounds {
            s = self.matrix.mul_vec(&s)?;
        }
        Ok(s)
    }
}

/// Accumulates a round as a product of elementary steps.
struct RoundBuilder {
    n: usize,
    m: DenseMatrix,
    gains: Vec<Vec<f64>>,
}

impl RoundBuilder {
    fn new(n: usize) -> Self {
        RoundBuilder { n, m: DenseMatrix::identity(n), gains: Vec::new() }
    }

    fn apply(&mut self, step: DenseMatrix) -> Result<()> {
        self.m = step.matmul(&self.m)?;
        for g in &mut self.gains {
            *g = step.mul_vec(g)?;
        }
        Ok(())
    }

    /// An independent unit noise draw added along `direction`.
    fn noise(&mut self, direction: Vec<(usize, f64)>) {
        let mut g = vec![0.0; self.n];
        for (i, v) in direction {
            g[i] += v;
        }
        self.gains.push(g);
    }

    /// Identity except for the listed rows, which are replaced.
    fn rows(&self, rows: &[(usize, Vec<(usize, f64)>)]) -> DenseMatrix {
        let mut s = DenseMatrix::identity(self.n);
        for (r, entries) in rows {
            for j in 0..self.n {
                s[(*r, j)] = 0.0;
            }
            for (j, v) in entries {
                s[(*r, *j)] += v;
            }
        }
        s
    }

    fn finish(self, spec: RoundMapSpec) -> LinearMap {
        LinearMap { spec, matrix: self.m, noise_gains: self.gains }
    }
}

/// Exact matrix of one round on the stacked state: `[x_1..x_p, x~]` for EASGD,
/// `[x_1..x_p, x~, lambda_1..lambda_p]` for ADMM, `[x]` for SGD and `[x, v]`
/// for momentum SGD. Round-robin EASGD composes the worker steps in index
/// order; with `tau > 1` the map covers `tau` rounds, the first of which
/// communicates.
pub fn build_round_map(spec: &RoundMapSpec) -> Result<LinearMap> {
    spec.validate()?;
    let (p, h, eta) = (spec.p, spec.h, spec.eta);
    let alpha = spec.alpha();
    let g = 1.0 - eta * h;
    let mut b = RoundBuilder::new(spec.state_dim());
    match spec.algorithm {
        MapAlgorithm::Sgd => {
            b.apply(b.rows(&[(0, vec![(0, g)])]))?;
            b.noise(vec![(0, -eta)]);
        }
        MapAlgorithm::Msgd => {
            let d = spec.delta;
            b.apply(b.rows(&[(0, vec![(0, g), (1, d * g)]), (1, vec![(0, -eta * h), (1, d * g)])]))?;
            b.noise(vec![(0, -eta), (1, -eta)]);
        }
        MapAlgorithm::EasgdSync => {
            let c = p;
            let mut rows: Vec<(usize, Vec<(usize, f64)>)> =
                (0..p).map(|i| (i, vec![(i, g - alpha), (c, alpha)])).collect();
            let mut center = vec![(c, 1.0 - p as f64 * alpha)];
            center.extend((0..p).map(|i| (i, alpha)));
            rows.push((c, center));
            b.apply(b.rows(&rows))?;
            for i in 0..p {
                b.noise(vec![(i, -eta)]);
            }
        }
        MapAlgorithm::EasgdRr => {
            let c = p;
            for round in 0..spec.tau {
                for i in 0..p {
                    let grad = b.rows(&[(i, vec![(i, g)])]);
                    let elastic =
                        b.rows(&[(i, vec![(i, 1.0 - alpha), (c, alpha)]), (c, vec![(c, 1.0 - alpha), (i, alpha)])]);
                    if round > 0 {
                        b.apply(grad)?;
                        b.noise(vec![(i, -eta)]);
                        continue;
                    }
                    match spec.comm_order {
                        CommOrder::Before => {
                            b.apply(elastic)?;
                            b.apply(grad)?;
                            b.noise(vec![(i, -eta)]);
                        }
                        CommOrder::After => {
                            b.apply(grad)?;
                            b.noise(vec![(i, -eta)]);
                            b.apply(elastic)?;
                        }
                        CommOrder::Concurrent => {
                            b.apply(b.rows(&[
                                (i, vec![(i, g - alpha), (c, alpha)]),
                                (c, vec![(c, 1.0 - alpha), (i, alpha)]),
                            ]))?;
                            b.noise(vec![(i, -eta)]);
                        }
                    }
                }
            }
        }
        MapAlgorithm::AdmmRr => {
            let denom = h + spec.rho;
            let kappa = spec.rho / denom;
            let c = p;
            let lam = |i: usize| p + 1 + i;
            for i in 0..p {
                b.apply(b.rows(&[(lam(i), vec![(lam(i), 1.0), (i, 1.0), (c, -1.0)])]))?;
                b.apply(b.rows(&[(i, vec![(c, kappa), (lam(i), -kappa)])]))?;
                let avg: Vec<(usize, f64)> =
                    (0..p).flat_map(|j| [(j, 1.0 / p as f64), (lam(j), 1.0 / p as f64)]).collect();
                b.apply(b.rows(&[(c, avg)]))?;
            }
        }
    }
    Ok(b.finish(*spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &DenseMatrix, b: &[Vec<f64>]) -> bool {
        let b = DenseMatrix::from_rows(b).unwrap();
        a.sub(&b).unwrap().max_abs() < 1e-15
    }

    #[test]
    fn dimensions() {
        for (alg, p, dim) in [
            (MapAlgorithm::EasgdSync, 3, 4),
            (MapAlgorithm::EasgdRr, 3, 4),
            (MapAlgorithm::AdmmRr, 3, 7),
            (MapAlgorithm::Msgd, 1, 2),
            (MapAlgorithm::Sgd, 1, 1),
        ] {
            let m = build_round_map(&RoundMapSpec::new(alg, p, 1.0, 0.1, 0.5)).unwrap();
            assert_eq!(m.dim(), dim, "{}", alg.as_str());
        }
    }

    #[test]
    fn sgd_scalar() {
        let m = build_round_map(&RoundMapSpec::new(MapAlgorithm::Sgd, 1, 2.0, 0.3, 0.0)).unwrap();
        assert!(close(&m.matrix, &[vec![1.0 - 0.6]]));
    }

    #[test]
    fn easgd_sync_single_worker() {
        let (eta, rho) = (0.2, 1.5);
        let a = eta * rho;
        let m = build_round_map(&RoundMapSpec::new(MapAlgorithm::EasgdSync, 1, 1.0, eta, rho)).unwrap();
        assert!(close(&m.matrix, &[vec![1.0 - eta - a, a], vec![a, 1.0 - a]]));
    }

    #[test]
    fn easgd_sync_half_half_radius() {
        let m = build_round_map(&RoundMapSpec::new(MapAlgorithm::EasgdSync, 1, 1.0, 1.0, 0.5)).unwrap();
        assert!((m.spectral_radius().unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn no_dynamics_is_identity() {
        for alg in [MapAlgorithm::EasgdSync, MapAlgorithm::EasgdRr, MapAlgorithm::Sgd] {
            let p = if alg == MapAlgorithm::Sgd { 1 } else { 3 };
            let m = build_round_map(&RoundMapSpec::new(alg, p, 1.0, 0.0, 0.0)).unwrap();
            assert_eq!(m.matrix, DenseMatrix::identity(m.dim()), "{}", alg.as_str());
        }
        let mut spec = RoundMapSpec::new(MapAlgorithm::Msgd, 1, 1.0, 0.0, 0.0);
        spec.delta = 0.7;
        let m = build_round_map(&spec).unwrap();
        assert!(close(&m.matrix, &[vec![1.0, 0.7], vec![0.0, 0.7]]));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(build_round_map(&RoundMapSpec::new(MapAlgorithm::Sgd, 2, 1.0, 0.1, 0.0)).is_err());
        assert!(build_round_map(&RoundMapSpec::new(MapAlgorithm::EasgdRr, 2, 0.0, 0.1, 0.0)).is_err());
        assert!(MapAlgorithm::parse("downpour").is_err());
    }

    #[test]
    fn zero_alpha_decouples_center() {
        let m = build_round_map(&RoundMapSpec::new(MapAlgorithm::EasgdRr, 2, 1.0, 0.5, 0.0)).unwrap();
        assert!(close(&m.matrix, &[vec![0.5, 0.0, 0.0], vec![0.0, 0.5, 0.0], vec![0.0, 0.0, 1.0]]));
        assert!((m.spectral_radius().unwrap() - 1.0).abs() < 1e-14);
    }
}
