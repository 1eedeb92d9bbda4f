//! Dense arithmetic and numerical utilities shared by every other module.

mod eigen;
mod gradcheck;
mod lyapunov;
mod matrix;
mod oracle;
mod rng;
mod vector;

pub use eigen::{eigenvalues, spectral_radius, Eigenvalue, MAX_QR_ITERATIONS};
pub use gradcheck::{finite_diff_grad, gradient_check_error, DEFAULT_FD_STEP};
pub use lyapunov::lyapunov_stationary;
pub use matrix::DenseMatrix;
pub use oracle::{Evaluation, GradientOracle};
pub use rng::Rng;
pub use vector::{axpy, ParamVector};
