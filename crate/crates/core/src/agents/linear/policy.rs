use crate::error::{Error, Result};

/// Sum of `w` over the active binary features.
pub fn linear_value(w: &[f64], active: &[usize]) -> Result<f64> {
    if let Some(&bad) = active.iter().find(|&&i| i >= w.len()) {
        return Err(Error::invalid(format!(
            "feature index {bad} out of range for {} weights",
            w.len()
        )));
    }
    Ok(dot(w, active))
}

#[inline]
pub(crate) fn dot(w: &[f64], active: &[usize]) -> f64 {
    active.iter().map(|&i| w[i]).sum()
}

#[inline]
pub(crate) fn dot_block(w: &[f64], block: usize, block_len: usize, active: &[usize]) -> f64 {
    let base = block * block_len;
    active.iter().map(|&i| w[base + i]).sum()
}

#[inline]
pub(crate) fn add_block(w: &mut [f64], block: usize, block_len: usize, active: &[usize], step: f64) {
    let base = block * block_len;
    for &i in active {
        w[base + i] += step;
    }
}

/// Softmax over linear action preferences `h(s, a) = u · x_h(s, a)`.
///
/// `x_h(s, a)` places the state features in the block belonging to `a`,
/// so each action has its own `n_features` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxPolicy {
    n_actions: usize,
    n_features: usize,
    pub u: Vec<f64>,
}

impl SoftmaxPolicy {
    pub fn zeros(n_actions: usize, n_features: usize) -> Self {
        SoftmaxPolicy {
            n_actions,
            n_features,
            u: vec![0.0; n_actions * n_features],
        }
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn preferences(&self, active: &[usize]) -> Vec<f64> {
        (0..self.n_actions)
            .map(|a| dot_block(&self.u, a, self.n_features, active))
            .collect()
    }

    /// Action probabilities, stabilized by subtracting the largest
    /// preference before exponentiating.
    pub fn probs(&self, active: &[usize]) -> Vec<f64> {
        softmax(&self.preferences(active))
    }

    /// `∇_u ln π(a | s) = x_h(s, a) - Σ_ξ π(ξ | s) x_h(s, ξ)` as a dense vector.
    pub fn grad_log_prob(&self, active: &[usize], action: usize) -> Vec<f64> {
        let probs = self.probs(active);
        let mut g = vec![0.0; self.u.len()];
        for (b, p) in probs.iter().enumerate() {
            let coef = if b == action { 1.0 - p } else { -p };
            for &i in active {
                g[b * self.n_features + i] += coef;
            }
        }
        g
    }

    pub fn log_prob(&self, active: &[usize], action: usize) -> f64 {
        let prefs = self.preferences(active);
        let max = prefs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + prefs.iter().map(|h| (h - max).exp()).sum::<f64>().ln();
        prefs[action] - log_z
    }

    /// `u += step · ∇ ln π(a | s)` without materializing the gradient.
    pub fn ascend(&mut self, active: &[usize], action: usize, step: f64) {
        let probs = self.probs(active);
        for (b, p) in probs.iter().enumerate() {
            let coef = if b == action { 1.0 - p } else { -p };
            add_block(&mut self.u, b, self.n_features, active, step * coef);
        }
    }
}

pub fn softmax(prefs: &[f64]) -> Vec<f64> {
    let max = prefs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = prefs.iter().map(|h| (h - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_value_examples() {
        let active: Vec<usize> = (0..32).map(|k| k * 3).collect();
        assert_eq!(linear_value(&vec![0.0; 96], &active).unwrap(), 0.0);
        assert_eq!(linear_value(&vec![1.0; 96], &active).unwrap(), 32.0);
        assert!(linear_value(&[1.0; 4], &[4]).is_err());
    }

    #[test]
    fn zero_weights_uniform() {
        let pi = SoftmaxPolicy::zeros(3, 10);
        for p in pi.probs(&[1, 4]) {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn shift_invariant() {
        let a = softmax(&[0.3, -1.0, 2.0]);
        let b = softmax(&[100.3, 99.0, 102.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let huge = softmax(&[1e6, 0.0, -1e6]);
        assert!(huge.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn ascend_matches_dense_gradient() {
        let mut pi = SoftmaxPolicy::zeros(3, 5);
        pi.u.iter_mut().enumerate().for_each(|(i, u)| *u = (i as f64 * 0.37).sin());
        let active = [0, 3];
        let g = pi.grad_log_prob(&active, 2);
        let mut moved = pi.clone();
        moved.ascend(&active, 2, 0.5);
        for i in 0..pi.u.len() {
            assert!((moved.u[i] - pi.u[i] - 0.5 * g[i]).abs() < 1e-15);
        }
    }
}
