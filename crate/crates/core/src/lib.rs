//! Compression of empirical Markov kernels onto small representative supports.
//!
//! The crate approximates each stage of a discrete-time Markov system by a
//! finitely supported kernel, choosing the support by minimizing the
//! integrated transportation distance to a sampled particle kernel. The
//! selection problem is solved by a decomposable Lagrangian dual maximized
//! with a momentum subgradient method ([`selection::run_subgradient`]), with
//! a brute-force oracle ([`selection::solve_exact`]) for small instances and
//! an exact transportation solver ([`transport::wasserstein_exact`]) for
//! verification. [`risk`] evaluates value functions backward over exact and
//! compressed systems.

// negated float comparisons reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod experiment;
pub mod model;
pub mod pipeline;
pub mod risk;
pub mod scenario;
pub mod selection;
pub mod transport;

pub use error::{Error, Result};
pub use model::{compose_marginal, pairwise_cost, validate_distribution, CostMatrix, DiscreteDistribution, DiscreteKernel, Point};
