//! Learning agents.
//!
//! Each algorithm is available both as a free step function that mutates
//! the tables it is given (handy for single-step checks) and as an agent
//! struct implementing [`Agent`], which is what the harness drives.
//!
//! Within one step every distributional agent does the same thing in the
//! same order: read `R̄` as the mean of the *pre-update* reward quantiles,
//! form the TD error (or quantile targets), update values, then move every
//! reward quantile with step `η_θ·α` using the observed reward. The
//! quantiles see the raw reward even on exploratory steps, so they track
//! the behavior policy's reward distribution.

pub mod linear;
pub mod tabular;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::oracle::PolicyTable;
use crate::values::argmax;

/// Step sizes and exploration rate.
///
/// `alpha` is the value step; the reward-quantile step is `eta_theta * alpha`,
/// the scalar average-reward step of the baselines is `eta_rbar * alpha`, and
/// the policy step of actor-critics is `eta_pi * alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentHyper {
    pub alpha: f64,
    pub eta_theta: f64,
    pub eta_rbar: f64,
    pub eta_pi: f64,
    pub epsilon: f64,
}

impl Default for AgentHyper {
    fn default() -> Self {
        AgentHyper {
            alpha: 0.01,
            eta_theta: 1.0,
            eta_rbar: 1.0,
            eta_pi: 1.0,
            epsilon: 0.1,
        }
    }
}

impl AgentHyper {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("eta_theta", self.eta_theta),
            ("eta_rbar", self.eta_rbar),
            ("eta_pi", self.eta_pi),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::invalid(format!(
                "epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn theta_step(&self) -> f64 {
        self.eta_theta * self.alpha
    }
}

/// ε-greedy choice over a row of action values.
///
/// Always consumes one uniform draw, plus one more when exploring, so runs
/// stay aligned across policies with the same seed.
pub fn epsilon_greedy<R: Rng + ?Sized>(q_row: &[f64], epsilon: f64, rng: &mut R) -> Result<usize> {
    if q_row.is_empty() {
        return Err(Error::invalid("cannot choose from an empty action row"));
    }
    let u: f64 = rng.random();
    if u < epsilon {
        Ok(rng.random_range(0..q_row.len()))
    } else {
        Ok(argmax(q_row))
    }
}

/// Draws an index from a probability vector.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Fixed behavior policy for the prediction (TD) agents.
pub trait Behavior<O>: Send {
    fn probs(&self, obs: &O) -> Vec<f64>;
}

impl Behavior<usize> for PolicyTable {
    fn probs(&self, obs: &usize) -> Vec<f64> {
        self.row(*obs).to_vec()
    }
}

/// Uniformly random actions regardless of the observation.
#[derive(Debug, Clone, Copy)]
pub struct UniformBehavior {
    pub n_actions: usize,
}

impl<O> Behavior<O> for UniformBehavior {
    fn probs(&self, _obs: &O) -> Vec<f64> {
        vec![1.0 / self.n_actions as f64; self.n_actions]
    }
}

/// Uniform interface the harness uses to drive any agent.
pub trait Agent: Send {
    type Obs;

    fn act(&mut self, obs: &Self::Obs, rng: &mut dyn RngCore) -> usize;

    fn learn(&mut self, obs: &Self::Obs, action: usize, reward: f64, next_obs: &Self::Obs);

    /// Current average-reward estimate.
    fn rbar(&self) -> f64;

    /// Per-step reward quantile estimates, for distributional agents.
    fn thetas(&self) -> Option<&[f64]> {
        None
    }

    /// Differential-return quantiles at the agent's watched cell, for D3
    /// tabular agents.
    fn omega_watch(&self) -> Option<Vec<f64>> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn greedy_without_exploration() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(epsilon_greedy(&[1.0, 3.0, 2.0], 0.0, &mut rng).unwrap(), 1);
        }
        assert!(epsilon_greedy(&[], 0.1, &mut rng).is_err());
    }

    #[test]
    fn full_exploration_is_uniform() {
        // chi-square goodness of fit, 3 categories, 10^4 draws; 2 dof
        // critical value at 0.001 is 13.82
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 10_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[epsilon_greedy(&[0.0, 9.0, 1.0], 1.0, &mut rng).unwrap()] += 1;
        }
        let expected = n as f64 / 3.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 13.82, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn greedy_frequency_matches_one_minus_half_epsilon() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| epsilon_greedy(&[0.0, 1.0], 0.1, &mut rng).unwrap() == 1)
            .count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.95).abs() < 0.01, "freq = {freq}");
    }

    #[test]
    fn hyper_validation() {
        assert!(AgentHyper::default().validate().is_ok());
        let bad = AgentHyper {
            epsilon: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = AgentHyper {
            alpha: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
