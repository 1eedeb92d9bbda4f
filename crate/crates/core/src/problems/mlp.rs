use crate::error::{check_dims, Error, Result};
use crate::numeric::{Evaluation, GradientOracle, ParamVector, Rng};
use crate::problems::logistic::{batch_indices, sigmoid, softplus};
use crate::problems::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlpLoss {
    /// `1/2 (out - y)^2`
    Squared,
    /// `log(1 + exp(-y out))`
    Logistic,
}

/// One hidden tanh layer, scalar output.
///
/// Flattened parameter layout: `W1` (hidden x d, row-major), `b1` (hidden),
/// `w2` (hidden), `b2` (1).
#[derive(Debug, Clone)]
pub struct TinyMlpProblem {
    data: Dataset,
    hidden: usize,
    loss: MlpLoss,
}

impl TinyMlpProblem {
    pub fn new(data: Dataset, hidden: usize, loss: MlpLoss) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::config("hidden layer width must be at least 1"));
        }
        if data.is_empty() {
            return Err(Error::config("empty dataset"));
        }
        Ok(TinyMlpProblem { data, hidden, loss })
    }

    pub fn layer_sizes(&self) -> [usize; 3] {
        [self.data.dim(), self.hidden, 1]
    }

    pub fn param_count(&self) -> usize {
        let d = self.data.dim();
        self.hidden * d + 2 * self.hidden + 1
    }

    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` per layer.
    pub fn init_params(&self, seed: u64) -> ParamVector {
        let d = self.data.dim();
        let mut rng = Rng::new(seed);
        let a1 = 1.0 / (d as f64).sqrt();
        let a2 = 1.0 / (self.hidden as f64).sqrt();
        let first = self.hidden * d + self.hidden;
        let data = (0..self.param_count())
            .map(|i| if i < first { rng.uniform_range(-a1, a1) } else { rng.uniform_range(-a2, a2) })
            .collect();
        ParamVector::from_raw(data)
    }

    fn forward_backward(&self, params: &ParamVector, minibatch: &[usize], want_grad: bool) -> Result<(f64, Vec<f64>)> {
        check_dims(self.param_count(), params.dim())?;
        let d = self.data.dim();
        let h = self.hidden;
        let p = params.as_slice();
        let (w1, rest) = p.split_at(h * d);
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(h);
        let b2 = b2[0];

        let mut grad = vec![0.0; p.len()];
        let mut act = vec![0.0; h];
        let mut total = 0.0;
        let mut count = 0usize;
        for i in batch_indices(minibatch, self.data.len())? {
            let x = self.data.row(i);
            let y = self.data.labels[i];
            for (k, a) in act.iter_mut().enumerate() {
                let pre: f64 = w1[k * d..(k + 1) * d].iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b1[k];
                *a = pre.tanh();
            }
            let out: f64 = act.iter().zip(w2).map(|(a, w)| a * w).sum::<f64>() + b2;
            let (l, dout) = match self.loss {
                MlpLoss::Squared => (0.5 * (out - y) * (out - y), out - y),
                MlpLoss::Logistic => (softplus(-y * out), -y * sigmoid(-y * out)),
            };
            total += l;
            count += 1;
            if want_grad {
                let (g_w1, rest) = grad.split_at_mut(h * d);
                let (g_b1, rest) = rest.split_at_mut(h);
                let (g_w2, g_b2) = rest.split_at_mut(h);
                g_b2[0] += dout;
                for k in 0..h {
                    g_w2[k] += dout * act[k];
                    let dpre = dout * w2[k] * (1.0 - act[k] * act[k]);
                    g_b1[k] += dpre;
                    g_w1[k * d..(k + 1) * d].iter_mut().zip(x).for_each(|(g, xi)| *g += dpre * xi);
                }
            }
        }
        let inv = 1.0 / count as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
        Ok((total * inv, grad))
    }
}

impl GradientOracle for TinyMlpProblem {
    fn dim(&self) -> usize {
        self.param_count()
    }

    fn num_samples(&self) -> usize {
        self.data.len()
    }

    fn loss(&self, x: &ParamVector, minibatch: &[usize]) -> Result<f64> {
        let (l, _) = self.forward_backward(x, minibatch, false)?;
        if l.is_finite() {
            Ok(l)
        } else {
            Err(Error::numerics("non-finite MLP loss"))
        }
    }

    fn eval(&self, x: &ParamVector, minibatch: &[usize], _noise: &mut Rng) -> Result<Evaluation> {
        let (loss, grad) = self.forward_backward(x, minibatch, true)?;
        Ok(Evaluation { loss, grad: ParamVector::new(grad)? })
    }

    fn initial_point(&self, seed: u64) -> ParamVector {
        self.init_params(seed)
    }
}
