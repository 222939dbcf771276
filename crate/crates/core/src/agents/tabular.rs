//! Tabular agents: D2 TD/Q, D3 TD/Q and the Differential Q-learning
//! baseline.

use rand::RngCore;

use super::{epsilon_greedy, sample_categorical, Agent, AgentHyper, Behavior};
use crate::error::{Error, Result};
use crate::oracle::PolicyTable;
use crate::quantile::{QuantileSet, TauGrid};
use crate::values::{argmax, QTable, VTable};

/// Differential-return quantiles `Ω_j(s, a)` (or `Ω_j(s)` with one action).
///
/// Quantile vectors are allowed to cross while learning.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnQuantileTable {
    n_actions: usize,
    grid: TauGrid,
    omega: Vec<f64>,
}

impl ReturnQuantileTable {
    pub fn zeros(n_states: usize, n_actions: usize, n: usize) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::invalid("return quantile table needs states and actions"));
        }
        let grid = TauGrid::new(n)?;
        Ok(ReturnQuantileTable {
            n_actions,
            grid,
            omega: vec![0.0; n_states * n_actions * n],
        })
    }

    /// State-indexed table for prediction.
    pub fn zeros_by_state(n_states: usize, n: usize) -> Result<Self> {
        Self::zeros(n_states, 1, n)
    }

    pub fn n(&self) -> usize {
        self.grid.len()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_states(&self) -> usize {
        self.omega.len() / (self.n_actions * self.n())
    }

    pub fn grid(&self) -> &TauGrid {
        &self.grid
    }

    fn offset(&self, s: usize, a: usize) -> usize {
        (s * self.n_actions + a) * self.n()
    }

    pub fn quantiles(&self, s: usize, a: usize) -> &[f64] {
        let o = self.offset(s, a);
        &self.omega[o..o + self.n()]
    }

    pub fn quantiles_mut(&mut self, s: usize, a: usize) -> &mut [f64] {
        let o = self.offset(s, a);
        let n = self.n();
        &mut self.omega[o..o + n]
    }

    pub fn mean(&self, s: usize, a: usize) -> f64 {
        self.quantiles(s, a).iter().sum::<f64>() / self.n() as f64
    }

    /// Mean of `Ω(s, ·)` for every action.
    pub fn mean_row(&self, s: usize) -> Vec<f64> {
        (0..self.n_actions).map(|a| self.mean(s, a)).collect()
    }

    /// `argmax_a (1/n) Σ_j Ω_j(s, a)`, lowest index on ties.
    pub fn greedy(&self, s: usize) -> usize {
        argmax(&self.mean_row(s))
    }
}

/// D2 Q-learning, one transition.
pub fn d2_q_step(
    q: &mut QTable,
    qs: &mut QuantileSet,
    s: usize,
    a: usize,
    r: f64,
    s_next: usize,
    hyper: &AgentHyper,
) {
    let rbar = qs.mean();
    let delta = r - rbar + q.max(s_next) - q.get(s, a);
    *q.get_mut(s, a) += hyper.alpha * delta;
    qs.update(r, hyper.theta_step());
}

/// D2 TD-learning, one transition.
pub fn d2_td_step(
    v: &mut VTable,
    qs: &mut QuantileSet,
    s: usize,
    r: f64,
    s_next: usize,
    hyper: &AgentHyper,
) {
    let rbar = qs.mean();
    let delta = r - rbar + v.get(s_next) - v.get(s);
    *v.get_mut(s) += hyper.alpha * delta;
    qs.update(r, hyper.theta_step());
}

/// Quantile-regression update of one cell toward the targets
/// `r - R̄ + target_k`. All increments are computed from the values held
/// before the step. Returns the mean absolute increment.
fn omega_cell_update(
    omega: &mut ReturnQuantileTable,
    s: usize,
    a: usize,
    shifted_targets: &[f64],
    alpha: f64,
) -> f64 {
    let n = omega.n();
    let taus: Vec<f64> = omega.grid().taus().to_vec();
    let cell = omega.quantiles_mut(s, a);
    let before: Vec<f64> = cell.to_vec();
    let scale = alpha / n as f64;
    let mut total_abs = 0.0;
    for (j, value) in cell.iter_mut().enumerate() {
        let below = shifted_targets
            .iter()
            .filter(|&&t| t - before[j] < 0.0)
            .count() as f64;
        let inc = scale * (n as f64 * taus[j] - below);
        *value += inc;
        total_abs += inc.abs();
    }
    total_abs / n as f64
}

/// D3 Q-learning, one transition. Returns the mean absolute change of the
/// updated `Ω(s, a)` cell.
pub fn d3_q_step(
    omega: &mut ReturnQuantileTable,
    qs: &mut QuantileSet,
    s: usize,
    a: usize,
    r: f64,
    s_next: usize,
    hyper: &AgentHyper,
) -> f64 {
    let rbar = qs.mean();
    let a_star = omega.greedy(s_next);
    let targets: Vec<f64> = omega
        .quantiles(s_next, a_star)
        .iter()
        .map(|w| r - rbar + w)
        .collect();
    let inc = omega_cell_update(omega, s, a, &targets, hyper.alpha);
    qs.update(r, hyper.theta_step());
    inc
}

/// D3 TD-learning on a state-indexed table. Returns the mean absolute
/// change of `Ω(s)`.
pub fn d3_td_step(
    omega: &mut ReturnQuantileTable,
    qs: &mut QuantileSet,
    s: usize,
    r: f64,
    s_next: usize,
    hyper: &AgentHyper,
) -> f64 {
    let rbar = qs.mean();
    let targets: Vec<f64> = omega
        .quantiles(s_next, 0)
        .iter()
        .map(|w| r - rbar + w)
        .collect();
    let inc = omega_cell_update(omega, s, 0, &targets, hyper.alpha);
    qs.update(r, hyper.theta_step());
    inc
}

/// Differential Q-learning: `R̄` is read before its own update.
pub fn differential_q_step(
    q: &mut QTable,
    rbar: &mut f64,
    s: usize,
    a: usize,
    r: f64,
    s_next: usize,
    hyper: &AgentHyper,
) {
    let delta = r - *rbar + q.max(s_next) - q.get(s, a);
    *rbar += hyper.eta_rbar * hyper.alpha * delta;
    *q.get_mut(s, a) += hyper.alpha * delta;
}

/// D2 Q-learning agent acting ε-greedily on `Q`.
#[derive(Debug, Clone)]
pub struct D2QAgent {
    pub q: QTable,
    pub qs: QuantileSet,
    pub hyper: AgentHyper,
}

impl D2QAgent {
    pub fn new(n_states: usize, n_actions: usize, m: usize, hyper: AgentHyper) -> Result<Self> {
        hyper.validate()?;
        Ok(D2QAgent {
            q: QTable::zeros(n_states, n_actions),
            qs: QuantileSet::zeros(m)?,
            hyper,
        })
    }
}

impl Agent for D2QAgent {
    type Obs = usize;

    fn act(&mut self, obs: &usize, rng: &mut dyn RngCore) -> usize {
        epsilon_greedy(self.q.row(*obs), self.hyper.epsilon, rng).expect("nonempty row")
    }

    fn learn(&mut self, obs: &usize, action: usize, reward: f64, next_obs: &usize) {
        d2_q_step(&mut self.q, &mut self.qs, *obs, action, reward, *next_obs, &self.hyper);
    }

    fn rbar(&self) -> f64 {
        self.qs.mean()
    }

    fn thetas(&self) -> Option<&[f64]> {
        Some(self.qs.thetas())
    }
}

/// D2 TD-learning agent evaluating a fixed policy.
#[derive(Debug, Clone)]
pub struct D2TdAgent {
    pub v: VTable,
    pub qs: QuantileSet,
    pub hyper: AgentHyper,
    pub policy: PolicyTable,
}

impl D2TdAgent {
    pub fn new(policy: PolicyTable, m: usize, hyper: AgentHyper) -> Result<Self> {
        hyper.validate()?;
        Ok(D2TdAgent {
            v: VTable::zeros(policy.n_states()),
            qs: QuantileSet::zeros(m)?,
            hyper,
            policy,
        })
    }
}

impl Agent for D2TdAgent {
    type Obs = usize;

    fn act(&mut self, obs: &usize, rng: &mut dyn RngCore) -> usize {
        sample_categorical(&self.policy.probs(obs), rng)
    }

    fn learn(&mut self, obs: &usize, _action: usize, reward: f64, next_obs: &usize) {
        d2_td_step(&mut self.v, &mut self.qs, *obs, reward, *next_obs, &self.hyper);
    }

    fn rbar(&self) -> f64 {
        self.qs.mean()
    }

    fn thetas(&self) -> Option<&[f64]> {
        Some(self.qs.thetas())
    }
}

/// D3 Q-learning agent acting ε-greedily on the mean of `Ω(s, ·)`.
#[derive(Debug, Clone)]
pub struct D3QAgent {
    pub omega: ReturnQuantileTable,
    pub qs: QuantileSet,
    pub hyper: AgentHyper,
    /// Cell reported by [`Agent::omega_watch`].
    pub watch: (usize, usize),
    /// Mean absolute `Ω` change made by the most recent step.
    pub last_increment: f64,
}

impl D3QAgent {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        m: usize,
        n: usize,
        hyper: AgentHyper,
    ) -> Result<Self> {
        hyper.validate()?;
        Ok(D3QAgent {
            omega: ReturnQuantileTable::zeros(n_states, n_actions, n)?,
            qs: QuantileSet::zeros(m)?,
            hyper,
            watch: (n_states - 1, n_actions - 1),
            last_increment: 0.0,
        })
    }
}

impl Agent for D3QAgent {
    type Obs = usize;

    fn act(&mut self, obs: &usize, rng: &mut dyn RngCore) -> usize {
        epsilon_greedy(&self.omega.mean_row(*obs), self.hyper.epsilon, rng).expect("nonempty row")
    }

    fn learn(&mut self, obs: &usize, action: usize, reward: f64, next_obs: &usize) {
        self.last_increment = d3_q_step(
            &mut self.omega,
            &mut self.qs,
            *obs,
            action,
            reward,
            *next_obs,
            &self.hyper,
        );
    }

    fn rbar(&self) -> f64 {
        self.qs.mean()
    }

    fn thetas(&self) -> Option<&[f64]> {
        Some(self.qs.thetas())
    }

    fn omega_watch(&self) -> Option<Vec<f64>> {
        Some(self.omega.quantiles(self.watch.0, self.watch.1).to_vec())
    }
}

/// D3 TD-learning agent evaluating a fixed policy.
#[derive(Debug, Clone)]
pub struct D3TdAgent {
    pub omega: ReturnQuantileTable,
    pub qs: QuantileSet,
    pub hyper: AgentHyper,
    pub policy: PolicyTable,
    pub watch: usize,
    pub last_increment: f64,
}

impl D3TdAgent {
    pub fn new(policy: PolicyTable, m: usize, n: usize, hyper: AgentHyper) -> Result<Self> {
        hyper.validate()?;
        let n_states = policy.n_states();
        Ok(D3TdAgent {
            omega: ReturnQuantileTable::zeros_by_state(n_states, n)?,
            qs: QuantileSet::zeros(m)?,
            hyper,
            policy,
            watch: n_states - 1,
            last_increment: 0.0,
        })
    }
}

impl Agent for D3TdAgent {
    type Obs = usize;

    fn act(&mut self, obs: &usize, rng: &mut dyn RngCore) -> usize {
        sample_categorical(&self.policy.probs(obs), rng)
    }

    fn learn(&mut self, obs: &usize, _action: usize, reward: f64, next_obs: &usize) {
        self.last_increment = d3_td_step(
            &mut self.omega,
            &mut self.qs,
            *obs,
            reward,
            *next_obs,
            &self.hyper,
        );
    }

    fn rbar(&self) -> f64 {
        self.qs.mean()
    }

    fn thetas(&self) -> Option<&[f64]> {
        Some(self.qs.thetas())
    }

    fn omega_watch(&self) -> Option<Vec<f64>> {
        Some(self.omega.quantiles(self.watch, 0).to_vec())
    }
}

/// Differential Q-learning baseline with a scalar `R̄`.
#[derive(Debug, Clone)]
pub struct DifferentialQAgent {
    pub q: QTable,
    pub rbar: f64,
    pub hyper: AgentHyper,
}

impl DifferentialQAgent {
    pub fn new(n_states: usize, n_actions: usize, hyper: AgentHyper) -> Result<Self> {
        hyper.validate()?;
        Ok(DifferentialQAgent {
            q: QTable::zeros(n_states, n_actions),
            rbar: 0.0,
            hyper,
        })
    }
}

impl Agent for DifferentialQAgent {
    type Obs = usize;

    fn act(&mut self, obs: &usize, rng: &mut dyn RngCore) -> usize {
        epsilon_greedy(self.q.row(*obs), self.hyper.epsilon, rng).expect("nonempty row")
    }

    fn learn(&mut self, obs: &usize, action: usize, reward: f64, next_obs: &usize) {
        differential_q_step(&mut self.q, &mut self.rbar, *obs, action, reward, *next_obs, &self.hyper);
    }

    fn rbar(&self) -> f64 {
        self.rbar
    }
}
