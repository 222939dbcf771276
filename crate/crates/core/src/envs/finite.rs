//! Explicit finite MDPs given by their full `p(s', r | s, a)` tensor.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use super::{EnvStep, Environment};
use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;

/// Finite MDP with a finite reward support.
///
/// `prob` is stored densely in `(s, a, s', r_index)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp {
    n_states: usize,
    n_actions: usize,
    reward_support: Vec<f64>,
    prob: Vec<f64>,
}

impl FiniteMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        reward_support: Vec<f64>,
        prob: Vec<f64>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 || reward_support.is_empty() {
            return Err(Error::invalid(
                "finite MDP needs at least one state, action and reward value",
            ));
        }
        if reward_support.iter().any(|r| !r.is_finite()) {
            return Err(Error::invalid("reward support must be finite"));
        }
        if reward_support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("reward support must be strictly increasing"));
        }
        let n_r = reward_support.len();
        let row = n_states * n_r;
        if prob.len() != n_states * n_actions * row {
            return Err(Error::invalid(format!(
                "probability tensor has {} entries, expected {}",
                prob.len(),
                n_states * n_actions * row
            )));
        }
        if prob.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::invalid("probabilities must be finite and nonnegative"));
        }
        for s in 0..n_states {
            for a in 0..n_actions {
                let start = (s * n_actions + a) * row;
                let total: f64 = prob[start..start + row].iter().sum();
                if (total - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::invalid(format!(
                        "row (s={s}, a={a}) sums to {total}, expected 1"
                    )));
                }
            }
        }
        Ok(FiniteMdp {
            n_states,
            n_actions,
            reward_support,
            prob,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn reward_support(&self) -> &[f64] {
        &self.reward_support
    }

    fn row_len(&self) -> usize {
        self.n_states * self.reward_support.len()
    }

    /// The `(s', r_index)` block for one state-action pair, flattened.
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let row = self.row_len();
        let start = (s * self.n_actions + a) * row;
        &self.prob[start..start + row]
    }

    pub fn prob(&self, s: usize, a: usize, next: usize, r_index: usize) -> f64 {
        self.row(s, a)[next * self.reward_support.len() + r_index]
    }

    /// `P(s' | s, a)`, marginalizing the reward.
    pub fn transition(&self, s: usize, a: usize, next: usize) -> f64 {
        let n_r = self.reward_support.len();
        self.row(s, a)[next * n_r..(next + 1) * n_r].iter().sum()
    }

    /// `E[R | s, a]`.
    pub fn expected_reward(&self, s: usize, a: usize) -> f64 {
        let n_r = self.reward_support.len();
        self.row(s, a)
            .iter()
            .enumerate()
            .map(|(k, p)| p * self.reward_support[k % n_r])
            .sum()
    }

    /// Draws `(s', r)` from `p(·, · | s, a)`.
    pub fn sample<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> (usize, f64) {
        let n_r = self.reward_support.len();
        let row = self.row(s, a);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last_nonzero = 0;
        for (k, &p) in row.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last_nonzero = k;
                if u < acc {
                    return (k / n_r, self.reward_support[k % n_r]);
                }
            }
        }
        // u landed in the rounding gap above the accumulated mass
        (last_nonzero / n_r, self.reward_support[last_nonzero % n_r])
    }

    /// Plain-text serialization.
    ///
    /// ```text
    /// <states> <actions> <n_rewards>
    /// <r_0> <r_1> ... <r_{n-1}>
    /// <s> <a> <s'> <r_index> <prob>      (one line per nonzero entry)
    /// ```
    ///
    /// Floats are written in shortest round-trip form, so parsing the text
    /// back yields bit-identical values.
    pub fn to_text(&self) -> String {
        let n_r = self.reward_support.len();
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.n_states, self.n_actions, n_r);
        let support: Vec<String> = self.reward_support.iter().map(|r| format!("{r:?}")).collect();
        let _ = writeln!(out, "{}", support.join(" "));
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                for (k, &p) in self.row(s, a).iter().enumerate() {
                    if p != 0.0 {
                        let _ = writeln!(out, "{s} {a} {} {} {p:?}", k / n_r, k % n_r);
                    }
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (ln, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(ln, format!("bad header: {e}")))?;
        let [n_states, n_actions, n_r] = dims[..] else {
            return Err(Error::parse(ln, "header must be `states actions n_rewards`"));
        };

        let (ln, support_line) = lines
            .next()
            .ok_or_else(|| Error::parse(ln + 1, "missing reward support line"))?;
        let support: Vec<f64> = support_line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(ln, format!("bad reward value: {e}")))?;
        if support.len() != n_r {
            return Err(Error::parse(
                ln,
                format!("expected {n_r} reward values, found {}", support.len()),
            ));
        }

        let mut prob = vec![0.0; n_states * n_actions * n_states * n_r];
        for (ln, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(Error::parse(ln, "entry must be `s a s' r_index prob`"));
            }
            let idx: Vec<usize> = fields[..4]
                .iter()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(ln, format!("bad index: {e}")))?;
            let p: f64 = fields[4]
                .parse()
                .map_err(|e| Error::parse(ln, format!("bad probability: {e}")))?;
            let (s, a, next, r) = (idx[0], idx[1], idx[2], idx[3]);
            if s >= n_states || a >= n_actions || next >= n_states || r >= n_r {
                return Err(Error::parse(ln, "index out of range"));
            }
            prob[((s * n_actions + a) * n_states + next) * n_r + r] = p;
        }
        FiniteMdp::new(n_states, n_actions, support, prob)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Random MDP that is unichain under every deterministic policy, and hence
/// under every stationary policy, and communicating.
///
/// Each `(s, a)` row keeps a random subset of successor states (about half)
/// with random weights; candidates are rejection-sampled until both
/// structural checks pass.
pub fn random_unichain_mdp<R: Rng + ?Sized>(
    n_states: usize,
    n_actions: usize,
    reward_support: &[f64],
    rng: &mut R,
) -> Result<FiniteMdp> {
    if n_states == 0 || n_actions == 0 || reward_support.is_empty() {
        return Err(Error::invalid("random MDP sizes must be positive"));
    }
    let n_policies = (n_actions as f64).powi(n_states as i32);
    if n_policies > 65_536.0 {
        return Err(Error::invalid(format!(
            "{n_actions}^{n_states} deterministic policies is too many to verify"
        )));
    }
    let n_r = reward_support.len();
    for _ in 0..100_000 {
        let mut prob = vec![0.0; n_states * n_actions * n_states * n_r];
        for sa in 0..n_states * n_actions {
            let row = &mut prob[sa * n_states * n_r..(sa + 1) * n_states * n_r];
            let forced = rng.random_range(0..n_states);
            for next in 0..n_states {
                if next != forced && rng.random_bool(0.5) {
                    continue;
                }
                for r in 0..n_r {
                    if r == 0 || rng.random_bool(0.6) {
                        row[next * n_r + r] = rng.random::<f64>() + 0.05;
                    }
                }
            }
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
        }
        let mdp = FiniteMdp::new(n_states, n_actions, reward_support.to_vec(), prob)?;
        if crate::oracle::check_communicating(&mdp)
            && crate::oracle::unichain_under_all_deterministic(&mdp)
        {
            return Ok(mdp);
        }
    }
    Err(Error::Numerical(
        "failed to sample a unichain MDP in 100000 attempts".into(),
    ))
}

/// A finite MDP driven as an environment; observations are state indices.
#[derive(Debug, Clone)]
pub struct FiniteMdpEnv {
    mdp: FiniteMdp,
    state: usize,
    start: Option<usize>,
}

impl FiniteMdpEnv {
    /// `start = None` draws the initial state uniformly at random.
    pub fn new(mdp: FiniteMdp, start: Option<usize>) -> Self {
        FiniteMdpEnv {
            mdp,
            state: 0,
            start,
        }
    }

    pub fn mdp(&self) -> &FiniteMdp {
        &self.mdp
    }
}

impl Environment for FiniteMdpEnv {
    type Obs = usize;

    fn n_actions(&self) -> usize {
        self.mdp.n_actions
    }

    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        self.state = match self.start {
            Some(s) => s,
            None => rng.random_range(0..self.mdp.n_states),
        };
        self.state
    }

    fn step<R: Rng + ?Sized>(&mut self, action: usize, rng: &mut R) -> EnvStep<usize> {
        let (next, reward) = self.mdp.sample(self.state, action, rng);
        self.state = next;
        EnvStep {
            reward,
            next_obs: next,
        }
    }
}
