//! Network delay estimation for industrial Modbus-style networks.
//!
//! The crate fits a general regression neural network (GRNN) — a Gaussian
//! kernel-weighted average over stored training samples — to observed
//! (network condition, round-trip delay) pairs. The kernel smoothing
//! parameter is tuned by a real-coded genetic algorithm that minimizes the
//! mean absolute percentage error (MAPE) of the delay estimates. A synthetic
//! trace generator produces reproducible Modbus-like delay datasets so the
//! whole pipeline can run at desk scale.
//!
//! Pipeline: [`trace::generate`] → [`grnn::GrnnModel::fit`] (or
//! [`ga::run`] to tune the smoothing first) → [`metrics::evaluate`].
//!
//! Everything stochastic is driven by explicit seeds; identical inputs give
//! bit-identical outputs, including the files written by the CLI.

pub mod dataset;
pub mod ga;
pub mod grnn;
pub mod metrics;
pub mod numfmt;
pub mod rng;
pub mod trace;
