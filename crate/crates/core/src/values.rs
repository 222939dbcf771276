//! Dense value tables shared by the tabular agents and the oracle.

use crate::error::{Error, Result};

/// Index of the largest entry; ties go to the lowest index.
///
/// NaN entries never win.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

pub fn max_of(xs: &[f64]) -> f64 {
    xs[argmax(xs)]
}

/// `max(x) - min(x)`.
pub fn span(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::invalid("span of an empty vector"));
    }
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok(hi - lo)
}

/// State-value table `V(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VTable {
    values: Vec<f64>,
}

impl VTable {
    pub fn zeros(n_states: usize) -> Self {
        VTable {
            values: vec![0.0; n_states],
        }
    }

    pub fn get(&self, s: usize) -> f64 {
        self.values[s]
    }

    pub fn get_mut(&mut self, s: usize) -> &mut f64 {
        &mut self.values[s]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn n_states(&self) -> usize {
        self.values.len()
    }
}

/// State-action value table `Q(s, a)`, row-major by state.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        QTable {
            n_actions,
            values: vec![0.0; n_states * n_actions],
        }
    }

    pub fn from_vec(n_states: usize, n_actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_states * n_actions || n_actions == 0 {
            return Err(Error::invalid(format!(
                "Q table of {n_states}x{n_actions} needs {} entries, got {}",
                n_states * n_actions,
                values.len()
            )));
        }
        Ok(QTable { n_actions, values })
    }

    pub fn n_states(&self) -> usize {
        self.values.len() / self.n_actions
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    pub fn get_mut(&mut self, s: usize, a: usize) -> &mut f64 {
        &mut self.values[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn max(&self, s: usize) -> f64 {
        max_of(self.row(s))
    }

    pub fn greedy(&self, s: usize) -> usize {
        argmax(self.row(s))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}
