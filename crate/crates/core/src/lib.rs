//! Elastic averaging SGD workbench.
//!
//! The crate is split the same way an experiment flows:
//!
//! - [`numeric`]: vectors, small dense matrices, the seeded generator, eigenvalues
//!   and the discrete Lyapunov fixed point.
//! - [`problems`]: desk-scale objectives with exact gradients and data sharding.
//! - [`algorithms`]: pure single-step kernels (SGD, Nesterov momentum, synchronous and
//!   asynchronous elastic averaging, the momentum variant, DOWNPOUR, round-robin ADMM).
//! - [`sim`]: deterministic discrete-event simulator of p workers and a center.
//! - [`stability`]: exact linear round maps on the scalar quadratic, spectral-radius
//!   scans and stationary variances.
//! - [`net`]: framed TCP parameter server and workers.
//! - [`cli`]: config files, run dispatch, CSV summaries and the speedup harness behind
//!   the `elastic-opt` binary.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod cli;
pub mod error;
pub mod metrics;
pub mod net;
pub mod numeric;
pub mod problems;
pub mod sim;
pub mod stability;

pub use error::{Error, Result};
pub use numeric::{DenseMatrix, GradientOracle, ParamVector, Rng};
