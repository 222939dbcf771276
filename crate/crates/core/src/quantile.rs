//! Quantile-regression primitives shared by every agent.
//!
//! The per-step reward distribution is represented by `m` Diracs placed at
//! the estimated quantiles `theta_i`, one for each level
//! `tau_i = (2i - 1) / (2m)`. Every agent in the crate moves these estimates
//! with the same stochastic update, [`qr_update`], and reads its average
//! reward off them with [`mean_of_quantiles`].

use crate::error::{Error, Result};

/// Midpoint quantile levels `tau_i = (2i - 1) / (2m)` for `i = 1..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct TauGrid {
    taus: Vec<f64>,
}

impl TauGrid {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("quantile count m must be at least 1"));
        }
        let denom = 2.0 * m as f64;
        let taus = (1..=m).map(|i| (2 * i - 1) as f64 / denom).collect();
        Ok(TauGrid { taus })
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn tau(&self, i: usize) -> f64 {
        self.taus[i]
    }
}

/// Builds the midpoint grid for `m` quantiles.
pub fn tau_locations(m: usize) -> Result<TauGrid> {
    TauGrid::new(m)
}

/// Quantile estimates of the limiting per-step reward distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSet {
    grid: TauGrid,
    thetas: Vec<f64>,
}

impl QuantileSet {
    /// All estimates start at zero.
    pub fn zeros(m: usize) -> Result<Self> {
        Ok(QuantileSet {
            grid: TauGrid::new(m)?,
            thetas: vec![0.0; m],
        })
    }

    pub fn from_thetas(thetas: Vec<f64>) -> Result<Self> {
        let grid = TauGrid::new(thetas.len())?;
        if thetas.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("quantile estimates must be finite"));
        }
        Ok(QuantileSet { grid, thetas })
    }

    pub fn grid(&self) -> &TauGrid {
        &self.grid
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Moves every estimate toward its quantile of the observed reward.
    /// One reward sample drives all `m` updates.
    pub fn update(&mut self, reward: f64, step: f64) {
        for (theta, &tau) in self.thetas.iter_mut().zip(self.grid.taus.iter()) {
            *theta = qr_update(*theta, tau, reward, step);
        }
    }

    /// The average-reward readout `R̄ = (1/m) Σ theta_i`.
    pub fn mean(&self) -> f64 {
        mean_of_quantiles(self)
    }
}

/// One quantile-regression step: `theta + alpha * (tau - 1{r < theta})`.
///
/// The indicator is a strict comparison, so a reward equal to the current
/// estimate pushes it up by `alpha * tau`.
#[inline]
pub fn qr_update(theta: f64, tau: f64, r: f64, alpha: f64) -> f64 {
    let below = if r < theta { 1.0 } else { 0.0 };
    theta + alpha * (tau - below)
}

pub fn mean_of_quantiles(qs: &QuantileSet) -> f64 {
    qs.thetas.iter().sum::<f64>() / qs.thetas.len() as f64
}

/// Threshold of the quantile Huber loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuberParams {
    lambda: f64,
}

impl HuberParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("huber lambda must be > 0, got {lambda}")));
        }
        Ok(HuberParams { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Default for HuberParams {
    fn default() -> Self {
        HuberParams { lambda: 1.0 }
    }
}

/// Quantile Huber loss `h_tau(x)` and its derivative with respect to `x`.
///
/// Quadratic inside `[-lambda, lambda]`, linear outside, weighted by
/// `|tau - 1{x < 0}|`. The derivative is continuous at `|x| = lambda`.
pub fn quantile_huber(x: f64, tau: f64, params: HuberParams) -> (f64, f64) {
    let lambda = params.lambda;
    let weight = (tau - if x < 0.0 { 1.0 } else { 0.0 }).abs();
    if x.abs() <= lambda {
        (weight * 0.5 * x * x, weight * x)
    } else {
        (
            weight * lambda * (x.abs() - 0.5 * lambda),
            weight * lambda * x.signum(),
        )
    }
}

/// Step-size schedule as a function of the update counter `t` (starting at 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    /// `scale / (1 + t)^power` with `0.5 < power <= 1`.
    Polynomial { scale: f64, power: f64 },
    /// `value` for `t < hold`, then `value / (1 + t - hold)^power`.
    ConstantThenDecay { value: f64, hold: u64, power: f64 },
}

impl StepSchedule {
    pub fn polynomial(scale: f64, power: f64) -> Result<Self> {
        if !(power > 0.5 && power <= 1.0) {
            return Err(Error::invalid(format!(
                "decay power must lie in (0.5, 1], got {power}"
            )));
        }
        if !(scale > 0.0) {
            return Err(Error::invalid("step scale must be positive"));
        }
        Ok(StepSchedule::Polynomial { scale, power })
    }

    pub fn at(&self, t: u64) -> f64 {
        match *self {
            StepSchedule::Constant(a) => a,
            StepSchedule::Polynomial { scale, power } => scale / (1.0 + t as f64).powf(power),
            StepSchedule::ConstantThenDecay { value, hold, power } => {
                if t < hold {
                    value
                } else {
                    value / (1.0 + (t - hold) as f64).powf(power)
                }
            }
        }
    }

    /// Largest step the schedule ever produces.
    pub fn sup(&self) -> f64 {
        match *self {
            StepSchedule::Constant(a) => a,
            StepSchedule::Polynomial { scale, .. } => scale,
            StepSchedule::ConstantThenDecay { value, .. } => value,
        }
    }
}
