//! Environments: the red-pill blue-pill task, a continuing inverted
//! pendulum, and explicit finite MDPs.

mod finite;
mod pendulum;
mod rpbp;

use rand::Rng;

pub use finite::{random_unichain_mdp, FiniteMdp, FiniteMdpEnv};
pub use pendulum::{pendulum_step, wrap_angle, Pendulum, PendulumState, PENDULUM_TORQUES};
pub use rpbp::{
    rpbp_as_finite_mdp, rpbp_step, DiscreteDist, Pill, RedPillBluePill, RedPillBluePillConfig,
    World,
};

/// Outcome of one environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep<O> {
    pub reward: f64,
    pub next_obs: O,
}

/// A continuing environment. There are no terminal states.
pub trait Environment {
    type Obs: Clone;

    fn n_actions(&self) -> usize;

    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Self::Obs;

    fn step<R: Rng + ?Sized>(&mut self, action: usize, rng: &mut R) -> EnvStep<Self::Obs>;
}
