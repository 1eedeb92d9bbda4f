use crate::error::{check_dims, Error, Result};
use crate::numeric::{DenseMatrix, Evaluation, GradientOracle, ParamVector, Rng};

/// `f(x) = 1/2 x^T H x - b^T x` with gradient `H x - b + sigma * xi`,
/// `xi` standard normal drawn from the caller's noise stream.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    h: DenseMatrix,
    b: ParamVector,
    noise_sigma: f64,
    x_star: Option<ParamVector>,
}

impl QuadraticProblem {
    pub fn new(h: DenseMatrix, b: ParamVector, noise_sigma: f64) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::config("curvature must be square"));
        }
        check_dims(h.rows(), b.dim())?;
        if !h.is_symmetric(1e-12 * h.max_abs().max(1.0)) {
            return Err(Error::config("curvature must be symmetric"));
        }
        validate_sigma(noise_sigma)?;
        let x_star = h.solve(&b).ok();
        Ok(QuadraticProblem { h, b, noise_sigma, x_star })
    }

    /// One-dimensional `h x^2 / 2 - b x`.
    pub fn scalar(h: f64, b: f64, noise_sigma: f64) -> Result<Self> {
        if !(h >= 0.0) {
            return Err(Error::config(format!("curvature must be nonnegative, got {h}")));
        }
        QuadraticProblem::new(DenseMatrix::new(1, 1, vec![h])?, ParamVector::new(vec![b])?, noise_sigma)
    }

    pub fn curvature(&self) -> &DenseMatrix {
        &self.h
    }

    pub fn linear_term(&self) -> &ParamVector {
        &self.b
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn exact_gradient(&self, x: &ParamVector) -> Result<ParamVector> {
        check_dims(self.h.cols(), x.dim())?;
        let hx = self.h.mul_vec(x.as_slice())?;
        let g = ParamVector::from_raw(hx.iter().zip(self.b.as_slice()).map(|(a, b)| a - b).collect());
        g.ensure_finite()?;
        Ok(g)
    }

    fn value(&self, x: &ParamVector) -> Result<f64> {
        check_dims(self.h.cols(), x.dim())?;
        let hx = self.h.mul_vec(x.as_slice())?;
        let quad: f64 = hx.iter().zip(x.as_slice()).map(|(a, b)| a * b).sum();
        Ok(0.5 * quad - self.b.dot(x)?)
    }
}

fn validate_sigma(sigma: f64) -> Result<()> {
    if sigma >= 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("noise sigma must be finite and nonnegative, got {sigma}")))
    }
}

impl GradientOracle for QuadraticProblem {
    fn dim(&self) -> usize {
        self.b.dim()
    }

    fn loss(&self, x: &ParamVector, _minibatch: &[usize]) -> Result<f64> {
        self.value(x)
    }

    fn eval(&self, x: &ParamVector, _minibatch: &[usize], noise: &mut Rng) -> Result<Evaluation> {
        let loss = self.value(x)?;
        let mut grad = self.exact_gradient(x)?;
        if self.noise_sigma > 0.0 {
            for g in grad.as_mut_slice() {
                *g += self.noise_sigma * noise.normal();
            }
            grad.ensure_finite()?;
        }
        Ok(Evaluation { loss, grad })
    }

    fn optimum(&self) -> Option<&ParamVector> {
        self.x_star.as_ref()
    }

    fn quadratic_terms(&self) -> Option<(&DenseMatrix, &ParamVector)> {
        Some((&self.h, &self.b))
    }
}

/// Random orthogonal matrix: modified Gram-Schmidt on a standard normal matrix.
fn random_rotation(dim: usize, rng: &mut Rng) -> DenseMatrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
        for c in &cols {
            let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(c).for_each(|(a, b)| *a -= d * b);
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-8 {
            v.iter_mut().for_each(|a| *a /= n);
            cols.push(v);
        }
    }
    let mut r = DenseMatrix::zeros(dim, dim);
    for (j, c) in cols.iter().enumerate() {
        for (i, v) in c.iter().enumerate() {
            r[(i, j)] = *v;
        }
    }
    r
}

/// Eigenvalues used by [`make_quadratic`]: the smallest is 1, the largest is
/// `condition_number`, and interior ones are log-uniform in between. A
/// one-dimensional problem gets the single eigenvalue 1.
pub fn quadratic_spectrum(dim: usize, condition_number: f64, rng: &mut Rng) -> Vec<f64> {
    let log_c = condition_number.ln();
    (0..dim)
        .map(|i| match i {
            0 => 1.0,
            _ if i == dim - 1 => condition_number,
            _ => (rng.uniform() * log_c).exp(),
        })
        .collect()
}

/// Seeded quadratic `H = R diag(lambda) R^T` with a random rotation `R`,
/// standard normal `b`, and `x* = R diag(1/lambda) R^T b`.
pub fn make_quadratic(dim: usize, condition_number: f64, noise_sigma: f64, seed: u64) -> Result<QuadraticProblem> {
    if dim == 0 {
        return Err(Error::config("quadratic dimension must be at least 1"));
    }
    if !(condition_number >= 1.0 && condition_number.is_finite()) {
        return Err(Error::config(format!("condition number must be >= 1, got {condition_number}")));
    }
    validate_sigma(noise_sigma)?;
    let mut rng = Rng::new(seed);
    let lambda = quadratic_spectrum(dim, condition_number, &mut rng);
    let r = random_rotation(dim, &mut rng);
    let b = ParamVector::new((0..dim).map(|_| rng.normal()).collect())?;

    let mut h = r.matmul(&DenseMatrix::diag(&lambda)?)?.matmul(&r.transpose())?;
    h.symmetrize();
    let inv = DenseMatrix::diag(&lambda.iter().map(|l| 1.0 / l).collect::<Vec<_>>())?;
    let h_inv = r.matmul(&inv)?.matmul(&r.transpose())?;
    let x_star = ParamVector::new(h_inv.mul_vec(b.as_slice())?)?;
    Ok(QuadraticProblem { h, b, noise_sigma, x_star: Some(x_star) })
}
