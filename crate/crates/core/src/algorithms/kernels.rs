//! Single-step update kernels. Every kernel consumes its state by value and
//! returns the successor, so the simulator and the network runtime run the
//! exact same arithmetic.

use crate::algorithms::{CenterState, CommOrder, HyperParams, WorkerState};
use crate::error::{check_dims, Error, Result};
use crate::numeric::{GradientOracle, ParamVector};

fn finite(v: ParamVector) -> Result<ParamVector> {
    v.ensure_finite()?;
    Ok(v)
}

fn require_finite_input(x: &ParamVector, what: &str) -> Result<()> {
    x.ensure_finite().map_err(|e| Error::numerics(format!("{what}: {e}")))
}

/// `x - eta * grad`.
pub fn sgd_step(x: &ParamVector, grad: &ParamVector, eta: f64) -> Result<ParamVector> {
    check_dims(x.dim(), grad.dim())?;
    require_finite_input(x, "sgd input")?;
    require_finite_input(grad, "sgd gradient")?;
    if !eta.is_finite() {
        return Err(Error::numerics(format!("learning rate {eta} is not finite")));
    }
    finite(ParamVector::from_raw(x.as_slice().iter().zip(grad.as_slice()).map(|(xi, gi)| xi - eta * gi).collect()))
}

/// One plain SGD iteration of a worker: draw a gradient at `x` and descend.
pub fn sgd_worker_step(mut ws: WorkerState, oracle: &dyn GradientOracle, eta: f64) -> Result<WorkerState> {
    let g = ws.gradient(oracle, &ws.x.clone())?;
    ws.x = sgd_step(&ws.x, &g, eta)?;
    ws.t += 1;
    Ok(ws)
}

/// Nesterov momentum: `v' = delta v - eta grad(x + delta v)`, `x' = x + v'`.
pub fn msgd_step(mut ws: WorkerState, oracle: &dyn GradientOracle, eta: f64, delta: f64) -> Result<WorkerState> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::config(format!("delta must lie in [0, 1), got {delta}")));
    }
    let (x, v) = nesterov(&mut ws, oracle, eta, delta)?;
    ws.x = x;
    ws.v = v;
    ws.t += 1;
    Ok(ws)
}

fn nesterov(
    ws: &mut WorkerState,
    oracle: &dyn GradientOracle,
    eta: f64,
    delta: f64,
) -> Result<(ParamVector, ParamVector)> {
    check_dims(ws.x.dim(), ws.v.dim())?;
    require_finite_input(&ws.x, "momentum input")?;
    let look = ParamVector::from_raw(ws.x.as_slice().iter().zip(ws.v.as_slice()).map(|(x, v)| x + delta * v).collect());
    let g = ws.gradient(oracle, &look)?;
    let v = finite(ParamVector::from_raw(
        ws.v.as_slice().iter().zip(g.as_slice()).map(|(v, g)| delta * v - eta * g).collect(),
    ))?;
    let x = finite(ParamVector::from_raw(ws.x.as_slice().iter().zip(v.as_slice()).map(|(x, v)| x + v).collect()))?;
    Ok((x, v))
}

/// `alpha * (x - x_tilde)`.
pub fn elastic_difference(x: &ParamVector, x_tilde: &ParamVector, alpha: f64) -> Result<ParamVector> {
    check_dims(x.dim(), x_tilde.dim())?;
    finite(ParamVector::from_raw(x.as_slice().iter().zip(x_tilde.as_slice()).map(|(a, b)| alpha * (a - b)).collect()))
}

/// Center update as the sum of elastic differences: `x~ + alpha sum_i (x_i - x~)`.
pub fn center_sum_form(x_tilde: &ParamVector, workers: &[&ParamVector], alpha: f64) -> Result<ParamVector> {
    let mut out = x_tilde.as_slice().to_vec();
    for x in workers {
        check_dims(x_tilde.dim(), x.dim())?;
        for ((o, xi), c) in out.iter_mut().zip(x.as_slice()).zip(x_tilde.as_slice()) {
            *o += alpha * (xi - c);
        }
    }
    finite(ParamVector::from_raw(out))
}

/// Center update as a moving average: `(1 - beta) x~ + beta mean_i(x_i)`.
pub fn center_moving_average_form(x_tilde: &ParamVector, workers: &[&ParamVector], beta: f64) -> Result<ParamVector> {
    let mean = ParamVector::mean(workers)?;
    check_dims(x_tilde.dim(), mean.dim())?;
    finite(ParamVector::from_raw(
        x_tilde.as_slice().iter().zip(mean.as_slice()).map(|(c, m)| (1.0 - beta) * c + beta * m).collect(),
    ))
}

/// One synchronous round: every worker uses the pre-round center and every
/// center term uses pre-round workers.
///
/// `x_i+ = x_i - eta g_i(x_i) - alpha (x_i - x~)`, `x~+ = x~ + alpha sum_i (x_i - x~)`.
/// The center version advances by one per round.
pub fn easgd_sync_round(
    workers: Vec<WorkerState>,
    center: CenterState,
    oracle: &dyn GradientOracle,
    hp: &HyperParams,
) -> Result<(Vec<WorkerState>, CenterState)> {
    if workers.len() != hp.p {
        return Err(Error::config(format!("hp.p = {} but {} workers were given", hp.p, workers.len())));
    }
    let alpha = hp.alpha();
    let c = &center.x_tilde;
    let refs: Vec<&ParamVector> = workers.iter().map(|w| &w.x).collect();
    let x_tilde = center_sum_form(c, &refs, alpha)?;
    let mut out = Vec::with_capacity(workers.len());
    for mut ws in workers {
        check_dims(c.dim(), ws.x.dim())?;
        let g = ws.gradient(oracle, &ws.x.clone())?;
        ws.x = finite(ParamVector::from_raw(
            ws.x.as_slice()
                .iter()
                .zip(g.as_slice())
                .zip(c.as_slice())
                .map(|((x, g), c)| x - hp.eta * g - alpha * (x - c))
                .collect(),
        ))?;
        ws.t += 1;
        out.push(ws);
    }
    Ok((out, CenterState { x_tilde, version: center.version + 1 }))
}

fn check_snapshot(ws: &WorkerState, snapshot: Option<&ParamVector>, hp: &HyperParams) -> Result<()> {
    let due = hp.is_comm_step(ws.t);
    match (due, snapshot) {
        (true, None) => Err(Error::protocol(format!("step {} communicates but no center snapshot was given", ws.t))),
        (false, Some(_)) => {
            Err(Error::protocol(format!("step {} does not communicate but a snapshot was given", ws.t)))
        }
        (_, Some(s)) => check_dims(ws.x.dim(), s.dim()),
        _ => Ok(()),
    }
}

fn subtract(x: &ParamVector, e: &ParamVector) -> Result<ParamVector> {
    finite(ParamVector::from_raw(x.as_slice().iter().zip(e.as_slice()).map(|(a, b)| a - b).collect()))
}

/// Asynchronous elastic averaging for one local iteration.
///
/// On communication steps (`tau` divides `t`) the worker forms
/// `e = alpha (x - x~_snapshot)`, subtracts it from `x` and returns it for
/// delivery to the center. The gradient step is placed according to
/// `hp.comm_order`. Other steps only descend and return `None`.
pub fn easgd_async_worker_step(
    mut ws: WorkerState,
    center_snapshot: Option<&ParamVector>,
    oracle: &dyn GradientOracle,
    hp: &HyperParams,
) -> Result<(WorkerState, Option<ParamVector>)> {
    check_snapshot(&ws, center_snapshot, hp)?;
    let alpha = hp.alpha();
    let elastic = match (center_snapshot, hp.comm_order) {
        (None, _) => {
            let g = ws.gradient(oracle, &ws.x.clone())?;
            ws.x = sgd_step(&ws.x, &g, hp.eta)?;
            None
        }
        (Some(s), CommOrder::Before) => {
            let e = elastic_difference(&ws.x, s, alpha)?;
            ws.x = subtract(&ws.x, &e)?;
            let g = ws.gradient(oracle, &ws.x.clone())?;
            ws.x = sgd_step(&ws.x, &g, hp.eta)?;
            Some(e)
        }
        (Some(s), CommOrder::After) => {
            let g = ws.gradient(oracle, &ws.x.clone())?;
            ws.x = sgd_step(&ws.x, &g, hp.eta)?;
            let e = elastic_difference(&ws.x, s, alpha)?;
            ws.x = subtract(&ws.x, &e)?;
            Some(e)
        }
        (Some(s), CommOrder::Concurrent) => {
            let e = elastic_difference(&ws.x, s, alpha)?;
            let g = ws.gradient(oracle, &ws.x.clone())?;
            ws.x = subtract(&sgd_step(&ws.x, &g, hp.eta)?, &e)?;
            Some(e)
        }
    };
    ws.t += 1;
    Ok((ws, elastic))
}

/// `x~ + e` with the version advanced by one.
pub fn center_apply_elastic(center: CenterState, e: &ParamVector) -> Result<CenterState> {
    check_dims(center.x_tilde.dim(), e.dim())?;
    let x_tilde = finite(ParamVector::from_raw(
        center.x_tilde.as_slice().iter().zip(e.as_slice()).map(|(c, e)| c + e).collect(),
    ))?;
    Ok(CenterState { x_tilde, version: center.version + 1 })
}

/// Elastic averaging with the local step replaced by the Nesterov step of
/// [`msgd_step`]. The elastic exchange moves `x` only; the momentum buffer is
/// left untouched.
pub fn eamsgd_worker_step(
    mut ws: WorkerState,
    center_snapshot: Option<&ParamVector>,
    oracle: &dyn GradientOracle,
    hp: &HyperParams,
) -> Result<(WorkerState, Option<ParamVector>)> {
    check_snapshot(&ws, center_snapshot, hp)?;
    let alpha = hp.alpha();
    let elastic = match (center_snapshot, hp.comm_order) {
        (None, _) => {
            (ws.x, ws.v) = nesterov(&mut ws, oracle, hp.eta, hp.delta)?;
            None
        }
        (Some(s), CommOrder::Before) => {
            let e = elastic_difference(&ws.x, s, alpha)?;
            ws.x = subtract(&ws.x, &e)?;
            (ws.x, ws.v) = nesterov(&mut ws, oracle, hp.eta, hp.delta)?;
            Some(e)
        }
        (Some(s), CommOrder::After) => {
            (ws.x, ws.v) = nesterov(&mut ws, oracle, hp.eta, hp.delta)?;
            let e = elastic_difference(&ws.x, s, alpha)?;
            ws.x = subtract(&ws.x, &e)?;
            Some(e)
        }
        (Some(s), CommOrder::Concurrent) => {
            let e = elastic_difference(&ws.x, s, alpha)?;
            let (x, v) = nesterov(&mut ws, oracle, hp.eta, hp.delta)?;
            ws.x = subtract(&x, &e)?;
            ws.v = v;
            Some(e)
        }
    };
    ws.t += 1;
    Ok((ws, elastic))
}

/// Result of one DOWNPOUR iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct DownpourStep {
    pub worker: WorkerState,
    pub accumulated: ParamVector,
    /// Accumulated update to deliver to the center; present after every
    /// `tau`-th step. The worker must then adopt the fetched center through
    /// [`downpour_adopt_center`].
    pub push: Option<ParamVector>,
}

/// `g = grad(x)`, `x -= eta g`, `accumulated -= eta g`. After the step that
/// completes a period of `tau` steps the accumulator is handed out as the push
/// and reset to zero.
pub fn downpour_worker_step(
    mut ws: WorkerState,
    accumulated: ParamVector,
    oracle: &dyn GradientOracle,
    hp: &HyperParams,
) -> Result<DownpourStep> {
    check_dims(ws.x.dim(), accumulated.dim())?;
    let g = ws.gradient(oracle, &ws.x.clone())?;
    ws.x = sgd_step(&ws.x, &g, hp.eta)?;
    let accumulated = sgd_step(&accumulated, &g, hp.eta)?;
    ws.t += 1;
    if ws.t.is_multiple_of(hp.tau) {
        let dim = accumulated.dim();
        Ok(DownpourStep { worker: ws, accumulated: ParamVector::zeros(dim), push: Some(accumulated) })
    } else {
        Ok(DownpourStep { worker: ws, accumulated, push: None })
    }
}

/// Replaces the worker's variable with a freshly fetched center.
pub fn downpour_adopt_center(mut ws: WorkerState, fetched: &ParamVector) -> Result<WorkerState> {
    check_dims(ws.x.dim(), fetched.dim())?;
    ws.x = fetched.clone();
    Ok(ws)
}
