use super::chain::{stationary_distribution, PolicyTable};
use crate::envs::FiniteMdp;
use crate::error::{Error, Result};
use crate::quantile::TauGrid;

/// Tolerance for deciding that a CDF level coincides with a quantile level.
const LEVEL_TOL: f64 = 1e-12;

/// The set of `τ`-quantiles of a distribution: a point, or a closed
/// interval where the CDF is flat at exactly level `τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileInterval {
    pub lo: f64,
    pub hi: f64,
}

impl QuantileInterval {
    pub fn point(x: f64) -> Self {
        QuantileInterval { lo: x, hi: x }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    /// Distance from `x` to the interval (zero inside).
    pub fn distance(&self, x: f64) -> f64 {
        (self.lo - x).max(x - self.hi).max(0.0)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Something that knows its own quantile sets and mean.
pub trait Cdf {
    fn quantile_set(&self, tau: f64) -> QuantileInterval;
    fn mean(&self) -> f64;
}

/// CDF of a distribution on finitely many reals.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCdf {
    support: Vec<f64>,
    cum: Vec<f64>,
}

impl DiscreteCdf {
    /// `masses[k]` is the probability of `support[k]`; zero masses are kept.
    pub fn from_masses(support: &[f64], masses: &[f64]) -> Result<Self> {
        if support.is_empty() || support.len() != masses.len() {
            return Err(Error::invalid("support and masses must be nonempty and aligned"));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("CDF support must be strictly increasing"));
        }
        if masses.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::invalid("negative probability mass"));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("masses sum to {total}")));
        }
        let mut acc = 0.0;
        let mut cum: Vec<f64> = masses
            .iter()
            .map(|m| {
                acc += m / total;
                acc
            })
            .collect();
        *cum.last_mut().unwrap() = 1.0;
        Ok(DiscreteCdf {
            support: support.to_vec(),
            cum,
        })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn cum(&self) -> &[f64] {
        &self.cum
    }

    pub fn masses(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cum
            .iter()
            .map(|&c| {
                let m = c - prev;
                prev = c;
                m
            })
            .collect()
    }

    /// `F(y)`.
    pub fn eval(&self, y: f64) -> f64 {
        match self.support.iter().rposition(|&s| s <= y) {
            Some(k) => self.cum[k],
            None => 0.0,
        }
    }
}

impl Cdf for DiscreteCdf {
    fn quantile_set(&self, tau: f64) -> QuantileInterval {
        let n = self.support.len();
        let k = self
            .cum
            .iter()
            .position(|&c| c >= tau - LEVEL_TOL)
            .unwrap_or(n - 1);
        let lo = self.support[k];
        if (self.cum[k] - tau).abs() > LEVEL_TOL {
            return QuantileInterval::point(lo);
        }
        // F sits at exactly tau from support[k] up to the next point with mass
        match (k + 1..n).find(|&j| self.cum[j] > tau + LEVEL_TOL) {
            Some(j) => QuantileInterval {
                lo,
                hi: self.support[j],
            },
            None => QuantileInterval::point(lo),
        }
    }

    fn mean(&self) -> f64 {
        self.support
            .iter()
            .zip(self.masses())
            .map(|(r, m)| r * m)
            .sum()
    }
}

/// Continuous uniform distribution on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformCdf {
    pub lo: f64,
    pub hi: f64,
}

impl Cdf for UniformCdf {
    fn quantile_set(&self, tau: f64) -> QuantileInterval {
        QuantileInterval::point(self.lo + tau * (self.hi - self.lo))
    }

    fn mean(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Quantile sets at every level of `grid`.
pub fn true_quantiles<C: Cdf + ?Sized>(cdf: &C, grid: &TauGrid) -> Vec<QuantileInterval> {
    grid.taus().iter().map(|&t| cdf.quantile_set(t)).collect()
}

/// Mass of each reward value under the stationary state-action measure.
fn limiting_masses(mdp: &FiniteMdp, policy: &PolicyTable) -> Result<Vec<f64>> {
    let mu = stationary_distribution(mdp, policy)?;
    let n_r = mdp.reward_support().len();
    let mut masses = vec![0.0; n_r];
    for (s, &mu_s) in mu.iter().enumerate() {
        for a in 0..mdp.n_actions() {
            let w = mu_s * policy.prob(s, a);
            if w == 0.0 {
                continue;
            }
            for (k, &p) in mdp.row(s, a).iter().enumerate() {
                masses[k % n_r] += w * p;
            }
        }
    }
    Ok(masses)
}

/// CDF of the reward received per step once the chain has mixed.
pub fn limiting_reward_distribution(mdp: &FiniteMdp, policy: &PolicyTable) -> Result<DiscreteCdf> {
    let masses = limiting_masses(mdp, policy)?;
    DiscreteCdf::from_masses(mdp.reward_support(), &masses)
}

/// Long-run reward per step of `policy`.
pub fn average_reward(mdp: &FiniteMdp, policy: &PolicyTable) -> Result<f64> {
    let masses = limiting_masses(mdp, policy)?;
    Ok(mdp
        .reward_support()
        .iter()
        .zip(&masses)
        .map(|(r, m)| r * m)
        .sum())
}

/// Sample quantiles of an observed reward stream at the grid levels, using
/// the lower value `sorted[ceil(τ n) - 1]`.
pub fn empirical_reward_quantiles(rewards: &[f64], grid: &TauGrid) -> Result<Vec<f64>> {
    if rewards.len() < 10 * grid.len() {
        return Err(Error::invalid(format!(
            "need at least {} rewards for {} quantiles, got {}",
            10 * grid.len(),
            grid.len(),
            rewards.len()
        )));
    }
    let mut sorted = rewards.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(grid
        .taus()
        .iter()
        .map(|&t| {
            let rank = (t * n as f64).ceil() as usize;
            sorted[rank.clamp(1, n) - 1]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantile::tau_locations;

    #[test]
    fn flat_region_gives_interval() {
        let cdf = DiscreteCdf::from_masses(&[-1.0, 1.0], &[0.5, 0.5]).unwrap();
        let q = cdf.quantile_set(0.5);
        assert_eq!(q, QuantileInterval { lo: -1.0, hi: 1.0 });
        assert_eq!(cdf.quantile_set(0.25), QuantileInterval::point(-1.0));
        assert_eq!(cdf.quantile_set(0.75), QuantileInterval::point(1.0));
    }

    #[test]
    fn zero_mass_points_are_skipped() {
        let cdf = DiscreteCdf::from_masses(&[0.0, 1.0, 2.0], &[0.5, 0.0, 0.5]).unwrap();
        assert_eq!(cdf.quantile_set(0.5), QuantileInterval { lo: 0.0, hi: 2.0 });
        assert_eq!(cdf.eval(1.5), 0.5);
        assert_eq!(cdf.eval(-1.0), 0.0);
    }

    #[test]
    fn point_mass() {
        let cdf = DiscreteCdf::from_masses(&[3.0], &[1.0]).unwrap();
        for q in true_quantiles(&cdf, &tau_locations(5).unwrap()) {
            assert_eq!(q, QuantileInterval::point(3.0));
        }
        assert_eq!(cdf.mean(), 3.0);
    }

    #[test]
    fn empirical_lower_convention() {
        let grid = tau_locations(2).unwrap();
        let rewards: Vec<f64> = (0..20).map(|i| (i % 2) as f64).collect();
        // ten zeros, ten ones: τ = 0.25 -> 0, τ = 0.75 -> 1
        assert_eq!(empirical_reward_quantiles(&rewards, &grid).unwrap(), vec![0.0, 1.0]);
        assert!(empirical_reward_quantiles(&rewards[..19], &grid).is_err());
        let constant = vec![4.5; 100];
        assert_eq!(
            empirical_reward_quantiles(&constant, &tau_locations(10).unwrap()).unwrap(),
            vec![4.5; 10]
        );
    }

    #[test]
    fn interval_helpers() {
        let q = QuantileInterval { lo: 0.0, hi: 1.0 };
        assert!(q.contains(1.05, 0.1));
        assert!(!q.contains(1.2, 0.1));
        assert_eq!(q.distance(0.5), 0.0);
        assert!((q.distance(-0.25) - 0.25).abs() < 1e-15);
    }
}
