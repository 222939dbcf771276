//! Exact ground truth on explicit finite MDPs.
//!
//! Everything here is computed in closed form (dense linear solves, CDF
//! inversion, relative value iteration) so agent behavior can be checked
//! against numbers that do not depend on sampling.
//!
//! Differential values are only defined up to an additive constant, so
//! learned tables are never compared pointwise with `q_star`; compare
//! greedy policies, value differences, and average rewards instead.

mod chain;
mod reward;
mod rvi;

pub use chain::{
    check_communicating, check_unichain, induced_chain, stationary_distribution,
    unichain_under_all_deterministic, PolicyTable,
};
pub use reward::{
    average_reward, empirical_reward_quantiles, limiting_reward_distribution, true_quantiles, Cdf,
    DiscreteCdf, QuantileInterval, UniformCdf,
};
pub use rvi::{
    bellman_gap, bellman_operator, bellman_span, optimality_residual, relative_value_iteration,
    RviSolution,
};
pub use crate::values::span;
