//! Core algorithms for simulating a multimodal mobility-on-demand (MoD) system
//! whose demand responds to service quality, finding the day-to-day mode-share
//! equilibrium for a set of supply parameters, and optimizing those parameters
//! with Gaussian-process Bayesian optimization.
//!
//! The crate is `no_std` and needs only `alloc`. Everything that touches the
//! filesystem, the clock or the command line lives in the `modsim` companion
//! crate.
//!
//! Module map:
//!
//! - [`netgraph`]: road and transit graphs, shortest paths, K-means zoning and
//!   the walk-transit-walk router.
//! - [`choice`]: multinomial-logit utilities, probabilities and draws.
//! - [`solver`]: dense simplex and branch-and-bound used by the fleet simulator.
//! - [`fleetsim`]: batched ride-pooling fleet simulation (RV/RTV graphs, ILP
//!   assignment, rebalancing).
//! - [`equilibrium`]: the choice → simulate → update inner loop.
//! - [`economics`]: fares, operator profit, per-ride tax and consumer surplus.
//! - [`bayesopt`]: GP surrogate, acquisition functions, BO loop and baselines.

#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![deny(rust_2018_idioms)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bayesopt;
pub mod budget;
pub mod choice;
pub mod economics;
pub mod equilibrium;
pub mod fleetsim;
pub mod netgraph;
pub mod rng;
pub mod solver;
pub mod synthetic;

pub use budget::Budget;
