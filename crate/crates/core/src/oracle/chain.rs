use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::envs::FiniteMdp;
use crate::error::{Error, Result};
use crate::values::QTable;

/// Stationary Markov policy `π(a | s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    n_actions: usize,
    probs: Vec<f64>,
}

impl PolicyTable {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if n_actions == 0 || probs.len() != n_states * n_actions {
            return Err(Error::invalid("policy table has the wrong shape"));
        }
        for (s, row) in probs.chunks(n_actions).enumerate() {
            let total: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("policy row {s} is not a distribution")));
            }
        }
        Ok(PolicyTable { n_actions, probs })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        PolicyTable {
            n_actions,
            probs: vec![1.0 / n_actions as f64; n_states * n_actions],
        }
    }

    pub fn deterministic(actions: &[usize], n_actions: usize) -> Result<Self> {
        Self::epsilon_greedy(actions, n_actions, 0.0)
    }

    /// Takes `actions[s]` with probability `1 - ε + ε/|A|`, every other
    /// action with `ε/|A|`.
    pub fn epsilon_greedy(actions: &[usize], n_actions: usize, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::invalid(format!("epsilon {epsilon} outside [0, 1]")));
        }
        if actions.iter().any(|&a| a >= n_actions) {
            return Err(Error::invalid("greedy action out of range"));
        }
        let explore = epsilon / n_actions as f64;
        let mut probs = vec![explore; actions.len() * n_actions];
        for (s, &a) in actions.iter().enumerate() {
            probs[s * n_actions + a] += 1.0 - epsilon;
        }
        Ok(PolicyTable { n_actions, probs })
    }

    /// Greedy (lowest-index ties) policy of a Q table, mixed with ε.
    pub fn from_q(q: &QTable, epsilon: f64) -> Result<Self> {
        let actions: Vec<usize> = (0..q.n_states()).map(|s| q.greedy(s)).collect();
        Self::epsilon_greedy(&actions, q.n_actions(), epsilon)
    }

    pub fn n_states(&self) -> usize {
        self.probs.len() / self.n_actions
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }
}

fn check_shapes(mdp: &FiniteMdp, policy: &PolicyTable) -> Result<()> {
    if mdp.n_states() != policy.n_states() || mdp.n_actions() != policy.n_actions() {
        return Err(Error::invalid(format!(
            "policy is {}x{} but MDP is {}x{}",
            policy.n_states(),
            policy.n_actions(),
            mdp.n_states(),
            mdp.n_actions()
        )));
    }
    Ok(())
}

/// Row-stochastic state transition matrix of the chain induced by `policy`.
pub fn induced_chain(mdp: &FiniteMdp, policy: &PolicyTable) -> DMatrix<f64> {
    let n = mdp.n_states();
    DMatrix::from_fn(n, n, |s, next| {
        (0..mdp.n_actions())
            .map(|a| policy.prob(s, a) * mdp.transition(s, a, next))
            .sum()
    })
}

fn graph_of(n: usize, edge: impl Fn(usize, usize) -> bool) -> DiGraph<(), ()> {
    let mut g = DiGraph::new();
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if edge(i, j) {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    g
}

/// Number of closed communicating classes of a chain given by its edges.
fn recurrent_class_count(n: usize, edge: impl Fn(usize, usize) -> bool) -> usize {
    let g = graph_of(n, &edge);
    let sccs = tarjan_scc(&g);
    let mut component = vec![0; n];
    for (c, scc) in sccs.iter().enumerate() {
        for node in scc {
            component[node.index()] = c;
        }
    }
    sccs.iter()
        .enumerate()
        .filter(|(c, scc)| {
            scc.iter().all(|node| {
                let i = node.index();
                (0..n).all(|j| !edge(i, j) || component[j] == *c)
            })
        })
        .count()
}

/// True iff the chain induced by `policy` has exactly one recurrent class.
pub fn check_unichain(mdp: &FiniteMdp, policy: &PolicyTable) -> bool {
    if check_shapes(mdp, policy).is_err() {
        return false;
    }
    let p = induced_chain(mdp, policy);
    recurrent_class_count(mdp.n_states(), |i, j| p[(i, j)] > 0.0) == 1
}

/// True iff every deterministic stationary policy induces a unichain.
///
/// A closed class under a randomized policy is closed under any
/// deterministic selection of its actions, so this also covers every
/// stationary policy.
pub fn unichain_under_all_deterministic(mdp: &FiniteMdp) -> bool {
    let n = mdp.n_states();
    let k = mdp.n_actions();
    let mut actions = vec![0usize; n];
    loop {
        let ok = recurrent_class_count(n, |i, j| mdp.transition(i, actions[i], j) > 0.0) == 1;
        if !ok {
            return false;
        }
        // odometer increment over action assignments
        let mut pos = 0;
        loop {
            if pos == n {
                return true;
            }
            actions[pos] += 1;
            if actions[pos] < k {
                break;
            }
            actions[pos] = 0;
            pos += 1;
        }
    }
}

/// True iff the graph joining `s -> s'` whenever some action can make that
/// transition is strongly connected.
pub fn check_communicating(mdp: &FiniteMdp) -> bool {
    let n = mdp.n_states();
    let g = graph_of(n, |i, j| (0..mdp.n_actions()).any(|a| mdp.transition(i, a, j) > 0.0));
    tarjan_scc(&g).len() == 1
}

const STATIONARY_RESIDUAL: f64 = 1e-10;

/// The unique `μ` with `μ P_π = μ` and `Σ μ = 1`.
pub fn stationary_distribution(mdp: &FiniteMdp, policy: &PolicyTable) -> Result<Vec<f64>> {
    check_shapes(mdp, policy)?;
    if !check_unichain(mdp, policy) {
        return Err(Error::Precondition(
            "policy does not induce a unichain".into(),
        ));
    }
    let n = mdp.n_states();
    let p = induced_chain(mdp, policy);
    // balance equations (Pᵀ - I) μ = 0 with the last one swapped for Σ μ = 1
    let mut a = p.transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let mu = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numerical("singular stationary system".into()))?;
    let mut mu: Vec<f64> = mu.iter().map(|&x| if x < 0.0 && x > -1e-14 { 0.0 } else { x }).collect();
    let total: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|x| *x /= total);

    let residual = (0..n)
        .map(|j| ((0..n).map(|i| mu[i] * p[(i, j)]).sum::<f64>() - mu[j]).abs())
        .fold(0.0, f64::max);
    if residual > STATIONARY_RESIDUAL || mu.iter().any(|&x| x < 0.0) {
        return Err(Error::Numerical(format!(
            "stationary solve residual {residual:e} exceeds {STATIONARY_RESIDUAL:e}"
        )));
    }
    Ok(mu)
}
