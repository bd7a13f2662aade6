//! Lipschitz-constrained learning on data manifolds.
//!
//! The crate implements the full pipeline for training small neural networks
//! whose smoothness is controlled along a data manifold rather than in the
//! ambient space:
//!
//! * [`nn`] — a two-layer tanh multilayer perceptron with exact
//!   reverse-mode gradients and plain gradient-descent steps.
//! * [`laplacian`] — heat-kernel point-cloud Laplacians over sample sets,
//!   Dirichlet-energy estimation, and graph diagnostics.
//! * [`lipschitz`] — neighborhood graphs and the empirical
//!   manifold-gradient-norm estimator.
//! * [`duality`] — dual variables for the constrained learning problem:
//!   the statistical multiplier and the pointwise multiplier field,
//!   with their ascent updates and simplex projection.
//! * [`trainers`] — the four training procedures (empirical risk
//!   minimization, ambient regularization, manifold regularization, and
//!   primal-dual manifold-Lipschitz training) plus evaluation.
//! * [`data`] — dataset generators (two moons), a grid-world navigation
//!   environment with shortest-path expert labels, and CSV ingestion.
//!
//! All computation is deterministic per seed, double precision, and CPU-only.

pub mod data;
pub mod duality;
pub mod error;
pub mod laplacian;
pub mod lipschitz;
pub mod nn;
pub mod trainers;

pub use data::{Dataset, NavEnv, Task};
pub use duality::DualState;
pub use error::{Error, Result};
pub use laplacian::{LaplacianConfig, LaplacianMatrix};
pub use lipschitz::{GradNormEstimate, Neighborhoods};
pub use nn::{Gradient, MlpParams};
pub use trainers::{TrainConfig, TrainReport};
