use crate::algorithms::AdmmWorkerState;
use crate::error::{Error, Result};

/// One scheduled turn of worker `i` in round-robin consensus ADMM on
/// `f(x) = h x^2 / 2`, scaled-dual form:
///
/// ```text
/// lambda_i <- lambda_i + (x_i - x~)
/// x_i      <- argmin_z h z^2/2 + rho/2 (z - x~ + lambda_i)^2 = rho (x~ - lambda_i) / (h + rho)
/// x~       <- mean_j (x_j + lambda_j)
/// ```
///
/// The center average uses the current values of every worker, including the
/// ones that have not moved this round.
pub fn admm_roundrobin_step(
    mut workers: Vec<AdmmWorkerState>,
    i: usize,
    x_tilde: f64,
    h: f64,
    rho: f64,
) -> Result<(Vec<AdmmWorkerState>, f64)> {
    if i >= workers.len() {
        return Err(Error::config(format!("worker {i} out of range for {} workers", workers.len())));
    }
    let denom = h + rho;
    if denom == 0.0 {
        return Err(Error::numerics("h + rho == 0 in the ADMM primal update"));
    }
    let w = &mut workers[i];
    w.lambda += w.x - x_tilde;
    w.x = rho * (x_tilde - w.lambda) / denom;
    let p = workers.len() as f64;
    let x_tilde = workers.iter().map(|w| w.x + w.lambda).sum::<f64>() / p;
    if !x_tilde.is_finite() || workers.iter().any(|w| !w.x.is_finite() || !w.lambda.is_finite()) {
        return Err(Error::numerics("non-finite ADMM state"));
    }
    Ok((workers, x_tilde))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(x: f64, lambda: f64) -> AdmmWorkerState {
        AdmmWorkerState { x, lambda }
    }

    #[test]
    fn origin_is_fixed() {
        let (ws, xt) = admm_roundrobin_step(vec![w(0.0, 0.0); 3], 1, 0.0, 2.0, 0.5).unwrap();
        assert!(ws.iter().all(|s| s.x == 0.0 && s.lambda == 0.0));
        assert_eq!(xt, 0.0);
    }

    #[test]
    fn flat_objective_jumps_to_penalty_argmin() {
        let (ws, _) = admm_roundrobin_step(vec![w(3.0, 0.5)], 0, 1.0, 0.0, 2.0).unwrap();
        let lambda = 0.5 + (3.0 - 1.0);
        assert_eq!(ws[0].lambda, lambda);
        assert_eq!(ws[0].x, 1.0 - lambda);
    }

    #[test]
    fn hand_arithmetic() {
        let (ws, xt) = admm_roundrobin_step(vec![w(1.0, 0.0)], 0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(ws[0].lambda, 0.0);
        assert_eq!(ws[0].x, 0.5);
        assert_eq!(xt, 0.5);
    }

    #[test]
    fn degenerate_denominator() {
        assert!(matches!(admm_roundrobin_step(vec![w(1.0, 0.0)], 0, 0.0, 0.0, 0.0), Err(Error::Numerics(_))));
        assert!(admm_roundrobin_step(vec![w(1.0, 0.0)], 1, 0.0, 1.0, 1.0).is_err());
    }
}
