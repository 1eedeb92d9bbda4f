use crate::error::{Error, Result};
use crate::numeric::{GradientOracle, ParamVector};

pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Central-difference gradient `(f(x + h e_j) - f(x - h e_j)) / 2h` of the
/// oracle's noise-free minibatch loss.
pub fn finite_diff_grad(
    oracle: &dyn GradientOracle,
    x: &ParamVector,
    minibatch: &[usize],
    h: f64,
) -> Result<ParamVector> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::config(format!("finite-difference step must be positive, got {h}")));
    }
    let mut probe = x.clone();
    let mut grad = Vec::with_capacity(x.dim());
    for j in 0..x.dim() {
        let orig = probe[j];
        probe.as_mut_slice()[j] = orig + h;
        let fp = oracle.loss(&probe, minibatch)?;
        probe.as_mut_slice()[j] = orig - h;
        let fm = oracle.loss(&probe, minibatch)?;
        probe.as_mut_slice()[j] = orig;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::numerics(format!("non-finite loss while probing coordinate {j}")));
        }
        grad.push((fp - fm) / (2.0 * h));
    }
    let out = ParamVector::from_raw(grad);
    out.ensure_finite()?;
    Ok(out)
}

/// `||grad - fd||_inf / (1 + ||grad||_inf)` at `x`, using the oracle's gradient
/// with noise disabled (a fresh generator is passed but noise-free oracles ignore it).
pub fn gradient_check_error(
    oracle: &dyn GradientOracle,
    analytic: &ParamVector,
    x: &ParamVector,
    minibatch: &[usize],
    h: f64,
) -> Result<f64> {
    let fd = finite_diff_grad(oracle, x, minibatch, h)?;
    Ok(analytic.sub(&fd)?.norm_inf() / (1.0 + analytic.norm_inf()))
}
