//! Two-state red-pill blue-pill task.
//!
//! Taking a pill moves the agent to that pill's world deterministically.
//! Each world has its own reward distribution; the blue world pays more on
//! average.

use rand::Rng;

use super::{EnvStep, Environment, FiniteMdp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum World {
    Red = 0,
    Blue = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pill {
    RedPill = 0,
    BluePill = 1,
}

impl World {
    pub fn from_index(i: usize) -> Option<World> {
        match i {
            0 => Some(World::Red),
            1 => Some(World::Blue),
            _ => None,
        }
    }
}

impl Pill {
    pub fn from_index(i: usize) -> Option<Pill> {
        match i {
            0 => Some(Pill::RedPill),
            1 => Some(Pill::BluePill),
            _ => None,
        }
    }

    pub fn destination(self) -> World {
        match self {
            Pill::RedPill => World::Red,
            Pill::BluePill => World::Blue,
        }
    }
}

/// Finite distribution over real values.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(Error::invalid("distribution needs matching nonempty values and probs"));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("distribution has a negative mass or non-finite value"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("distribution sums to {total}")));
        }
        Ok(DiscreteDist { values, probs })
    }

    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        DiscreteDist::new(values, vec![1.0 / n as f64; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.probs).map(|(v, p)| v * p).sum()
    }

    /// Mass assigned to `value` (summed over duplicate entries).
    pub fn mass(&self, value: f64) -> f64 {
        self.values
            .iter()
            .zip(&self.probs)
            .filter(|(v, _)| **v == value)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (v, p) in self.values.iter().zip(&self.probs) {
            acc += p;
            if u < acc {
                return *v;
            }
        }
        *self.values.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RedPillBluePillConfig {
    pub blue_reward: DiscreteDist,
    pub red_reward: DiscreteDist,
    /// Draw the reward from the world the agent arrives in (default) rather
    /// than the one it leaves.
    pub reward_on_arrival: bool,
}

impl Default for RedPillBluePillConfig {
    /// Blue pays uniformly on {0, 1, 2}; red pays uniformly on {-2, -1, 0}.
    fn default() -> Self {
        RedPillBluePillConfig {
            blue_reward: DiscreteDist::uniform(vec![0.0, 1.0, 2.0]).unwrap(),
            red_reward: DiscreteDist::uniform(vec![-2.0, -1.0, 0.0]).unwrap(),
            reward_on_arrival: true,
        }
    }
}

impl RedPillBluePillConfig {
    pub fn validate(&self) -> Result<()> {
        if self.blue_reward.mean() <= self.red_reward.mean() {
            return Err(Error::invalid(
                "blue world must have a higher mean reward than red world",
            ));
        }
        Ok(())
    }

    fn reward_dist(&self, world: World) -> &DiscreteDist {
        match world {
            World::Red => &self.red_reward,
            World::Blue => &self.blue_reward,
        }
    }
}

pub fn rpbp_step<R: Rng + ?Sized>(
    cfg: &RedPillBluePillConfig,
    state: World,
    action: Pill,
    rng: &mut R,
) -> EnvStep<World> {
    let next = action.destination();
    let source = if cfg.reward_on_arrival { next } else { state };
    EnvStep {
        reward: cfg.reward_dist(source).sample(rng),
        next_obs: next,
    }
}

/// The same task as an explicit 2-state, 2-action [`FiniteMdp`].
pub fn rpbp_as_finite_mdp(cfg: &RedPillBluePillConfig) -> Result<FiniteMdp> {
    cfg.validate()?;
    let mut support: Vec<f64> = cfg
        .blue_reward
        .values()
        .iter()
        .chain(cfg.red_reward.values())
        .copied()
        .collect();
    support.sort_by(f64::total_cmp);
    support.dedup();
    let n_r = support.len();

    let mut prob = vec![0.0; 2 * 2 * 2 * n_r];
    for s in [World::Red, World::Blue] {
        for a in [Pill::RedPill, Pill::BluePill] {
            let next = a.destination();
            let dist = cfg.reward_dist(if cfg.reward_on_arrival { next } else { s });
            for (k, &r) in support.iter().enumerate() {
                prob[((s as usize * 2 + a as usize) * 2 + next as usize) * n_r + k] = dist.mass(r);
            }
        }
    }
    FiniteMdp::new(2, 2, support, prob)
}

/// Red-pill blue-pill as an [`Environment`] over state indices.
#[derive(Debug, Clone)]
pub struct RedPillBluePill {
    cfg: RedPillBluePillConfig,
    state: World,
}

impl RedPillBluePill {
    pub fn new(cfg: RedPillBluePillConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(RedPillBluePill {
            cfg,
            state: World::Red,
        })
    }

    pub fn config(&self) -> &RedPillBluePillConfig {
        &self.cfg
    }
}

impl Environment for RedPillBluePill {
    type Obs = usize;

    fn n_actions(&self) -> usize {
        2
    }

    /// Starts in a uniformly random world.
    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        self.state = if rng.random_bool(0.5) { World::Blue } else { World::Red };
        self.state as usize
    }

    fn step<R: Rng + ?Sized>(&mut self, action: usize, rng: &mut R) -> EnvStep<usize> {
        let pill = Pill::from_index(action).expect("red-pill blue-pill has two actions");
        let step = rpbp_step(&self.cfg, self.state, pill, rng);
        self.state = step.next_obs;
        EnvStep {
            reward: step.reward,
            next_obs: self.state as usize,
        }
    }
}
