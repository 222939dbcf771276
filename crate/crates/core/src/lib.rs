//! Differential distributional reinforcement learning for average-reward
//! MDPs.
//!
//! Agents learn the quantiles of the *limiting per-step reward
//! distribution* of their policy, and read their average-reward estimate
//! off the mean of those quantiles. The double differential variants
//! additionally learn quantiles of the differential return.
//!
//! - [`quantile`]: τ-grids, the quantile-regression update, quantile Huber loss.
//! - [`envs`]: red-pill blue-pill, a continuing pendulum, explicit finite MDPs.
//! - [`agents`]: tabular and linear (tile-coded) agents plus baselines.
//! - [`oracle`]: exact stationary distributions, reward quantiles and RVI.
//! - [`harness`]: seeded runs, sweeps and the CSV record format.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod envs;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod quantile;
pub mod rng;
pub mod values;

pub use error::{Error, Result};
