use crate::error::{Error, Result};

/// Where the elastic exchange sits inside a communication iteration of the
/// asynchronous kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CommOrder {
    /// Elastic exchange first, then the gradient step at the moved point.
    #[default]
    Before,
    /// Gradient step first, then the elastic exchange from the descended point.
    After,
    /// Gradient and elastic difference both taken at the pre-iteration point
    /// and applied together, as the synchronous rule does.
    Concurrent,
}

impl CommOrder {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommOrder::Before => "before",
            CommOrder::After => "after",
            CommOrder::Concurrent => "concurrent",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "before" => Ok(CommOrder::Before),
            "after" => Ok(CommOrder::After),
            "concurrent" => Ok(CommOrder::Concurrent),
            other => Err(Error::config(format!("comm_order must be before|after|concurrent, got {other:?}"))),
        }
    }
}

/// Learning rate `eta`, elastic penalty `rho`, communication period `tau`,
/// worker count `p` and momentum `delta`. `alpha = eta * rho` and
/// `beta = p * alpha` are always derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub eta: f64,
    pub rho: f64,
    pub tau: u64,
    pub p: usize,
    pub delta: f64,
    pub comm_order: CommOrder,
}

impl HyperParams {
    pub fn new(eta: f64, rho: f64, tau: u64, p: usize, delta: f64) -> Result<Self> {
        let hp = HyperParams { eta, rho, tau, p, delta, comm_order: CommOrder::Before };
        hp.validate()?;
        Ok(hp)
    }

    /// Builds parameters from `(eta, alpha)` instead of `(eta, rho)`.
    pub fn from_alpha(eta: f64, alpha: f64, tau: u64, p: usize, delta: f64) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(Error::config(format!("eta must be positive, got {eta}")));
        }
        HyperParams::new(eta, alpha / eta, tau, p, delta)
    }

    pub fn with_comm_order(mut self, order: CommOrder) -> Self {
        self.comm_order = order;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.eta * self.rho
    }

    pub fn beta(&self) -> f64 {
        self.p as f64 * self.alpha()
    }

    /// Whether local step number `t` (counted from zero) exchanges with the center.
    pub fn is_comm_step(&self, t: u64) -> bool {
        t.is_multiple_of(self.tau)
    }

    /// Rejects out-of-range values. `beta >= 1` is accepted with a warning:
    /// the center is then no longer a moving average of the workers.
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::config(format!("eta must be positive and finite, got {}", self.eta)));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::config(format!("rho must be nonnegative and finite, got {}", self.rho)));
        }
        if self.tau == 0 {
            return Err(Error::config("tau must be at least 1"));
        }
        if self.p == 0 {
            return Err(Error::config("p must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::config(format!("delta must lie in [0, 1), got {}", self.delta)));
        }
        if self.beta() >= 1.0 {
            log::warn!("beta = p * eta * rho = {} >= 1; the center is not a moving average", self.beta());
        }
        Ok(())
    }
}
