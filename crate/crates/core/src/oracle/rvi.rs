use super::chain::check_communicating;
use crate::envs::FiniteMdp;
use crate::error::{Error, Result};
use crate::values::{span, QTable};

const SPAN_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 1_000_000;
/// Weight on the new iterate; values below 1 make every induced chain
/// aperiodic without changing the optimal gain or the greedy policy.
const DAMPING: f64 = 0.5;

/// Average-reward Q-learning operator
/// `TQ(s, a) = Σ_{s', r} p(s', r | s, a) (r + max_a' Q(s', a'))`.
pub fn bellman_operator(mdp: &FiniteMdp, q: &QTable) -> QTable {
    let n = mdp.n_states();
    let k = mdp.n_actions();
    let next_max: Vec<f64> = (0..n).map(|s| q.max(s)).collect();
    let mut out = QTable::zeros(n, k);
    for s in 0..n {
        for a in 0..k {
            let cont: f64 = (0..n).map(|s2| mdp.transition(s, a, s2) * next_max[s2]).sum();
            *out.get_mut(s, a) = mdp.expected_reward(s, a) + cont;
        }
    }
    out
}

/// `TQ - Q` as a flat vector over `(s, a)`.
pub fn bellman_gap(mdp: &FiniteMdp, q: &QTable) -> Vec<f64> {
    let tq = bellman_operator(mdp, q);
    tq.as_slice()
        .iter()
        .zip(q.as_slice())
        .map(|(t, x)| t - x)
        .collect()
}

/// `sp(TQ - Q)`, which bounds `|r̄* - r̄_π|` for any `π` greedy in `Q`.
pub fn bellman_span(mdp: &FiniteMdp, q: &QTable) -> f64 {
    span(&bellman_gap(mdp, q)).expect("Q table is nonempty")
}

#[derive(Debug, Clone)]
pub struct RviSolution {
    /// Optimal differential action values, pinned so `q_star(0, 0) = 0`.
    pub q_star: QTable,
    /// Optimal average reward.
    pub rbar_star: f64,
    pub sweeps: usize,
}

/// Relative value iteration on the optimality equation
/// `q(s, a) = Σ p(s', r | s, a) (r - r̄ + max_a' q(s', a'))`.
///
/// Each sweep moves `Q` halfway toward `TQ` and subtracts the gap at the
/// reference pair `(0, 0)`. Iteration stops once `sp(TQ - Q) <= 1e-10`;
/// the gap at the reference pair is then the optimal gain.
pub fn relative_value_iteration(mdp: &FiniteMdp) -> Result<RviSolution> {
    if !check_communicating(mdp) {
        return Err(Error::Precondition("MDP is not communicating".into()));
    }
    let n = mdp.n_states();
    let k = mdp.n_actions();
    let mut q = QTable::zeros(n, k);
    let mut last_span = f64::INFINITY;
    for sweep in 0..MAX_SWEEPS {
        let gap = bellman_gap(mdp, &q);
        let sp = span(&gap)?;
        let offset = gap[0];
        if sp <= SPAN_TOL {
            return Ok(RviSolution {
                q_star: q,
                rbar_star: offset,
                sweeps: sweep,
            });
        }
        last_span = sp;
        let next: Vec<f64> = q
            .as_slice()
            .iter()
            .zip(&gap)
            .map(|(x, g)| x + DAMPING * (g - offset))
            .collect();
        q = QTable::from_vec(n, k, next)?;
    }
    Err(Error::Numerical(format!(
        "relative value iteration did not reach span {SPAN_TOL:e} in {MAX_SWEEPS} sweeps \
         (last span {last_span:e})"
    )))
}

/// Largest absolute violation of the optimality equation by `(q, rbar)`.
pub fn optimality_residual(mdp: &FiniteMdp, q: &QTable, rbar: f64) -> f64 {
    bellman_gap(mdp, q)
        .iter()
        .map(|g| (g - rbar).abs())
        .fold(0.0, f64::max)
}
