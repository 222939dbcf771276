//! Linear function approximation agents over sparse binary features.
//!
//! With binary features `x(s)` the value gradient is `x(s)` itself, so
//! every semi-gradient update touches only the active indices. Action
//! conditioned heads stack one feature block per action. D3 agents keep
//! `n` return-quantile heads, one block per head (per action for Q).
//!
//! D3 critics descend the positive quantile Huber loss
//! `Σ_j (1/n) Σ_k h_τj(R - R̄ + Ω̂(S', k) - Ω̂(S, j))`
//! with the `Ω̂(S', ·)` targets held fixed.

mod policy;
mod tiles;

use rand::RngCore;

pub use policy::{linear_value, softmax, SoftmaxPolicy};
pub use tiles::{Featurizer, OneHot, PendulumCoder, TileCoder};

use policy::{add_block, dot, dot_block};

use super::{epsilon_greedy, sample_categorical, Agent, AgentHyper, Behavior};
use crate::error::Result;
use crate::quantile::{quantile_huber, HuberParams, QuantileSet, TauGrid};
use crate::values::{argmax, max_of};

/// Quantile Huber loss of the current head values against fixed targets,
/// and its gradient with respect to each head value.
///
/// `loss = Σ_j (1/n) Σ_k h_τj(targets[k] - estimates[j])`.
pub fn d3_huber_loss_grad(
    estimates: &[f64],
    targets: &[f64],
    grid: &TauGrid,
    huber: HuberParams,
) -> (f64, Vec<f64>) {
    let n_targets = targets.len() as f64;
    let mut loss = 0.0;
    let grad = estimates
        .iter()
        .zip(grid.taus())
        .map(|(&est, &tau)| {
            let mut g = 0.0;
            for &t in targets {
                let (l, dl) = quantile_huber(t - est, tau, huber);
                loss += l / n_targets;
                g -= dl / n_targets;
            }
            g
        })
        .collect();
    (loss, grad)
}

/// Scalar weights plus policy weights of an actor-critic.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearWeights {
    pub w: Vec<f64>,
    pub policy: SoftmaxPolicy,
}

/// D2 TD-learning with linear values.
pub struct D2FaTdAgent<F: Featurizer, B> {
    pub features: F,
    pub behavior: B,
    pub w: Vec<f64>,
    pub qs: QuantileSet,
    pub hyper: AgentHyper,
}

impl<F: Featurizer, B: Behavior<F::Obs>> D2FaTdAgent<F, B> {
    pub fn new(features: F, behavior: B, m: usize, hyper: AgentHyper) -> Result<Self> {
        hyper.validate()?;
        Ok(D2FaTdAgent {
            w: vec![0.0; features.n_features()],
            features,
            behavior,
            qs: QuantileSet::zeros(m)?,
            hyper,
        })
    }

    pub fn step(&mut self, x: &[usize], r: f64, x_next: &[usize]) {
        let rbar = self.qs.mean();
        let delta = r - rbar + dot(&self.w, x_next) - dot(&self.w, x);
        add_block(&mut self.w, 0, 0, x, self.hyper.alpha * delta);
        self.qs.update(r, self.hyper.theta_step());
    }
}

impl<F: Featurizer, B: Behavior<F::Obs>> Agent for D2FaTdAgent<F, B> {
    type Obs = F::Obs;

    fn act(&mut self, obs: &F::Obs, rng: &mut dyn RngCore) -> usize {
        sample_categorical(&self.behavior.probs(obs), rng)
    }

    fn learn(&mut self, obs: &F::Obs, _action: usize, reward: f64, next_obs: &F::Obs) {
        let (x, x_next) = (self.features.active(obs), self.features.active(next_obs));
        self.step(&x, reward, &x_next);
    }

    fn rbar(&self) -> f64 {
        self.qs.mean()
    }

    fn thetas(&self) -> Option<&[f64]> {
        Some(self.qs.thetas())
    }
}

/// D2 Q-learning with linear action values, acting ε-greedily.
pub struct D2FaQAgent<F: Featurizer> {
    pub features: F,
    pub n_actions: usize,
    pub w: Vec<f64>,
    pub qs: QuantileSet,
    pub hyper: AgentHyper,
}

impl<F: Featurizer> D2FaQAgent<F> {
    pub fn new(features: F, n_actions: usize, m: usize, hyper: AgentHyper) -> Result<Self> {
        hyper.validate()?;
        Ok(D2FaQAgent {
            w: vec![0.0; n_actions * features.n_features()],
            features,
            n_actions,
            qs: QuantileSet::zeros(m)?,
            hyper,
        })
    }

    pub fn q_row(&self, x: &[usize]) -> Vec<f64> {
        let d = self.features.n_features();
        (0..self.n_actions).map(|a| dot_block(&self.w, a, d, x)).collect()
    }

    pub fn step(&mut self, x: &[usize], a: usize, r: f64, x_next: &[usize]) {
        let d = self.features.n_features();
        let rbar = self.qs.mean();
        let next_max = max_of(&self.q_row(x_next));
        let delta = r - rbar + next_max - dot_block(&self.w, a, d, x);
        add_block(&mut self.w, a, d, x, self.hyper.alpha * delta);
        self.qs.update(r, self.hyper.theta_step());
    }
}

impl<F: Featurizer> Agent for D2FaQAgent<F> {
    type Obs = F::Obs;

    fn act(&mut self, obs: &F::Obs, rng: &mut dyn RngCore) -> usize {
        let row = self.q_row(&self.features.active(obs));
        epsilon_greedy(&row, self.hyper.epsilon, rng).expect("nonempty row")
    }

    fn learn(&mut self, obs: &F::Obs, action: usize, reward: f64, next_obs: &F::Obs) {
        let (x, x_next) = (self.features.active(obs), self.features.active(next_obs));
        self.step(&x, action, reward, &x_next);
    }

    fn rbar(&self) -> f64 {
        self.qs.mean()
    }

    fn thetas(&self) -> Option<&[f64]> {
        Some(self.qs.thetas())
    }
}

/// D2 actor-critic: linear critic, softmax actor, quantile `R̄`.
pub struct D2ActorCritic<F: Featurizer> {
    pub features: F,
    pub weights: LinearWeights,
    pub qs: QuantileSet,
    pub hyper: AgentHyper,
}

impl<F: Featurizer> D2ActorCritic<F> {
    pub fn new(features: F, n_actions: usize, m: usize, hyper: AgentHyper) -> Result<Self> {
        hyper.validate()?;
        let d = features.n_features();
        Ok(D2ActorCritic {
            weights: LinearWeights {
                w: vec![0.0; d],
                policy: SoftmaxPolicy::zeros(n_actions, d),
            },
            features,
            qs: QuantileSet::zeros(m)?,
            hyper,
        })
    }

    pub fn step(&mut self, x: &[usize], a: usize, r: f64, x_next: &[usize]) {
        let rbar = self.qs.mean();
        let w = &mut self.weights.w;
        let delta = r - rbar + dot(w, x_next) - dot(w, x);
        add_block(w, 0, 0, x, self.hyper.alpha * delta);
        self.weights
            .policy
            .ascend(x, a, self.hyper.eta_pi * self.hyper.alpha * delta);
        self.qs.update(r, self.hyper.theta_step());
    }
}

impl<F: Featurizer> Agent for D2ActorCritic<F> {
    type Obs = F::Obs;

    fn act(&mut self, obs: &F::Obs, rng: &mut dyn RngCore) -> usize {
        sample_categorical(&self.weights.policy.probs(&self.features.active(obs)), rng)
    }

    fn learn(&mut self, obs: &F::Obs, action: usize, reward: f64, next_obs: &F::Obs) {
        let (x, x_next) = (self.features.active(obs), self.features.active(next_obs));
        self.step(&x, action, reward, &x_next);
    }

    fn rbar(&self) -> f64 {
        self.qs.mean()
    }

    fn thetas(&self) -> Option<&[f64]> {
        Some(self.qs.thetas())
    }
}

/// Return-quantile heads `Ω̂(s, [a,] j)`, one weight block per head.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileHeads {
    n_features: usize,
    n_actions: usize,
    grid: TauGrid,
    pub w: Vec<f64>,
}

impl QuantileHeads {
    pub fn zeros(n_features: usize, n_actions: usize, n: usize) -> Result<Self> {
        Ok(QuantileHeads {
            n_features,
            n_actions,
            grid: TauGrid::new(n)?,
            w: vec![0.0; n_features * n_actions * n],
        })
    }

    pub fn n(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &TauGrid {
        &self.grid
    }

    /// `Ω̂(s, a, j)` for every head `j`.
    pub fn values(&self, x: &[usize], a: usize) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|j| dot_block(&self.w, a * n + j, self.n_features, x))
            .collect()
    }

    pub fn mean(&self, x: &[usize], a: usize) -> f64 {
        self.values(x, a).iter().sum::<f64>() / self.n() as f64
    }

    pub fn mean_row(&self, x: &[usize]) -> Vec<f64> {
        (0..self.n_actions).map(|a| self.mean(x, a)).collect()
    }

    /// One semi-gradient descent step of the quantile Huber loss on the
    /// heads of `(x, a)` toward `targets`. Returns the loss before the step.
    pub fn descend(
        &mut self,
        x: &[usize],
        a: usize,
        targets: &[f64],
        alpha: f64,
        huber: HuberParams,
    ) -> f64 {
        let n = self.n();
        let (loss, grad) = d3_huber_loss_grad(&self.values(x, a), targets, &self.grid, huber);
        for (j, g) in grad.iter().enumerate() {
            add_block(&mut self.w, a * n + j, self.n_features, x, -alpha * g);
        }
        loss
    }
}

fn shifted(values: Vec<f64>, shift: f64) -> Vec<f64> {
    values.into_iter().map(|v| shift + v).collect()
}

/// D3 TD-learning with linear return-quantile heads.
pub struct D3FaTdAgent<F: Featurizer, B> {
    pub features: F,
    pub behavior: B,
    pub heads: QuantileHeads,
    pub qs: QuantileSet,
    pub hyper: AgentHyper,
    pub huber: HuberParams,
}

impl<F: Featurizer, B: Behavior<F::Obs>> D3FaTdAgent<F, B> {
    pub fn new(
        features: F,
        behavior: B,
        m: usize,
        n: usize,
        hyper: AgentHyper,
        huber: HuberParams,
    ) -> Result<Self> {
        hyper.validate()?;
        Ok(D3FaTdAgent {
            heads: QuantileHeads::zeros(features.n_features(), 1, n)?,
            features,
            behavior,
            qs: QuantileSet::zeros(m)?,
            hyper,
            huber,
        })
    }

    pub fn step(&mut self, x: &[usize], r: f64, x_next: &[usize]) -> f64 {
        let rbar = self.qs.mean();
        let targets = shifted(self.heads.values(x_next, 0), r - rbar);
        let loss = self.heads.descend(x, 0, &targets, self.hyper.alpha, self.huber);
        self.qs.update(r, self.hyper.theta_step());
        loss
    }
}

impl<F: Featurizer, B: Behavior<F::Obs>> Agent for D3FaTdAgent<F, B> {
    type Obs = F::Obs;

    fn act(&mut self, obs: &F::Obs, rng: &mut dyn RngCore) -> usize {
        sample_categorical(&self.behavior.probs(obs), rng)
    }

    fn learn(&mut self, obs: &F::Obs, _action: usize, reward: f64, next_obs: &F::Obs) {
        let (x, x_next) = (self.features.active(obs), self.features.active(next_obs));
        self.step(&x, reward, &x_next);
    }

    fn rbar(&self) -> f64 {
        self.qs.mean()
    }

    fn thetas(&self) -> Option<&[f64]> {
        Some(self.qs.thetas())
    }
}

/// D3 Q-learning with linear return-quantile heads per action.
pub struct D3FaQAgent<F: Featurizer> {
    pub features: F,
    pub heads: QuantileHeads,
    pub qs: QuantileSet,
    pub hyper: AgentHyper,
    pub huber: HuberParams,
}

impl<F: Featurizer> D3FaQAgent<F> {
    pub fn new(
        features: F,
        n_actions: usize,
        m: usize,
        n: usize,
        hyper: AgentHyper,
        huber: HuberParams,
    ) -> Result<Self> {
        hyper.validate()?;
        Ok(D3FaQAgent {
            heads: QuantileHeads::zeros(features.n_features(), n_actions, n)?,
            features,
            qs: QuantileSet::zeros(m)?,
            hyper,
            huber,
        })
    }

    pub fn step(&mut self, x: &[usize], a: usize, r: f64, x_next: &[usize]) -> f64 {
        let rbar = self.qs.mean();
        let a_star = argmax(&self.heads.mean_row(x_next));
        let targets = shifted(self.heads.values(x_next, a_star), r - rbar);
        let loss = self.heads.descend(x, a, &targets, self.hyper.alpha, self.huber);
        self.qs.update(r, self.hyper.theta_step());
        loss
    }
}

impl<F: Featurizer> Agent for D3FaQAgent<F> {
    type Obs = F::Obs;

    fn act(&mut self, obs: &F::Obs, rng: &mut dyn RngCore) -> usize {
        let row = self.heads.mean_row(&self.features.active(obs));
        epsilon_greedy(&row, self.hyper.epsilon, rng).expect("nonempty row")
    }

    fn learn(&mut self, obs: &F::Obs, action: usize, reward: f64, next_obs: &F::Obs) {
        let (x, x_next) = (self.features.active(obs), self.features.active(next_obs));
        self.step(&x, action, reward, &x_next);
    }

    fn rbar(&self) -> f64 {
        self.qs.mean()
    }

    fn thetas(&self) -> Option<&[f64]> {
        Some(self.qs.thetas())
    }
}

/// D3 actor-critic: return-quantile critic, softmax actor whose TD error
/// uses the head means.
pub struct D3ActorCritic<F: Featurizer> {
    pub features: F,
    pub heads: QuantileHeads,
    pub policy: SoftmaxPolicy,
    pub qs: QuantileSet,
    pub hyper: AgentHyper,
    pub huber: HuberParams,
}

impl<F: Featurizer> D3ActorCritic<F> {
    pub fn new(
        features: F,
        n_actions: usize,
        m: usize,
        n: usize,
        hyper: AgentHyper,
        huber: HuberParams,
    ) -> Result<Self> {
        hyper.validate()?;
        let d = features.n_features();
        Ok(D3ActorCritic {
            heads: QuantileHeads::zeros(d, 1, n)?,
            policy: SoftmaxPolicy::zeros(n_actions, d),
            features,
            qs: QuantileSet::zeros(m)?,
            hyper,
            huber,
        })
    }

    pub fn step(&mut self, x: &[usize], a: usize, r: f64, x_next: &[usize]) -> f64 {
        let rbar = self.qs.mean();
        let next = self.heads.values(x_next, 0);
        let next_mean = next.iter().sum::<f64>() / next.len() as f64;
        let delta = r - rbar + next_mean - self.heads.mean(x, 0);
        let loss = self
            .heads
            .descend(x, 0, &shifted(next, r - rbar), self.hyper.alpha, self.huber);
        self.policy
            .ascend(x, a, self.hyper.eta_pi * self.hyper.alpha * delta);
        self.qs.update(r, self.hyper.theta_step());
        loss
    }
}

impl<F: Featurizer> Agent for D3ActorCritic<F> {
    type Obs = F::Obs;

    fn act(&mut self, obs: &F::Obs, rng: &mut dyn RngCore) -> usize {
        sample_categorical(&self.policy.probs(&self.features.active(obs)), rng)
    }

    fn learn(&mut self, obs: &F::Obs, action: usize, reward: f64, next_obs: &F::Obs) {
        let (x, x_next) = (self.features.active(obs), self.features.active(next_obs));
        self.step(&x, action, reward, &x_next);
    }

    fn rbar(&self) -> f64 {
        self.qs.mean()
    }

    fn thetas(&self) -> Option<&[f64]> {
        Some(self.qs.thetas())
    }
}

/// Differential actor-critic baseline with a scalar `R̄`.
pub struct DifferentialActorCritic<F: Featurizer> {
    pub features: F,
    pub weights: LinearWeights,
    pub rbar: f64,
    pub hyper: AgentHyper,
}

impl<F: Featurizer> DifferentialActorCritic<F> {
    pub fn new(features: F, n_actions: usize, hyper: AgentHyper) -> Result<Self> {
        hyper.validate()?;
        let d = features.n_features();
        Ok(DifferentialActorCritic {
            weights: LinearWeights {
                w: vec![0.0; d],
                policy: SoftmaxPolicy::zeros(n_actions, d),
            },
            features,
            rbar: 0.0,
            hyper,
        })
    }

    pub fn step(&mut self, x: &[usize], a: usize, r: f64, x_next: &[usize]) {
        let w = &mut self.weights.w;
        let delta = r - self.rbar + dot(w, x_next) - dot(w, x);
        self.rbar += self.hyper.eta_rbar * self.hyper.alpha * delta;
        add_block(w, 0, 0, x, self.hyper.alpha * delta);
        self.weights
            .policy
            .ascend(x, a, self.hyper.eta_pi * self.hyper.alpha * delta);
    }
}

impl<F: Featurizer> Agent for DifferentialActorCritic<F> {
    type Obs = F::Obs;

    fn act(&mut self, obs: &F::Obs, rng: &mut dyn RngCore) -> usize {
        sample_categorical(&self.weights.policy.probs(&self.features.active(obs)), rng)
    }

    fn learn(&mut self, obs: &F::Obs, action: usize, reward: f64, next_obs: &F::Obs) {
        let (x, x_next) = (self.features.active(obs), self.features.active(next_obs));
        self.step(&x, action, reward, &x_next);
    }

    fn rbar(&self) -> f64 {
        self.rbar
    }
}
