use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use diffdist::agents::linear::{softmax, SoftmaxPolicy, TileCoder};
use diffdist::envs::{random_unichain_mdp, FiniteMdp};
use diffdist::oracle::{
    induced_chain, stationary_distribution, true_quantiles, Cdf, PolicyTable, QuantileInterval,
};
use diffdist::quantile::{qr_update, quantile_huber, HuberParams, TauGrid};

/// Exponential(1): a skewed continuous law with mean 1.
struct Exp1;

impl Cdf for Exp1 {
    fn quantile_set(&self, tau: f64) -> QuantileInterval {
        QuantileInterval::point(-(1.0 - tau).ln())
    }

    fn mean(&self) -> f64 {
        1.0
    }
}

fn quantile_mean_error<C: Cdf>(cdf: &C, m: usize) -> f64 {
    let q = true_quantiles(cdf, &TauGrid::new(m).unwrap());
    (q.iter().map(|iv| iv.midpoint()).sum::<f64>() / m as f64 - cdf.mean()).abs()
}

#[test]
fn lemma1_error_shrinks_for_skewed_law() {
    let errs: Vec<f64> = [10, 100, 1000, 10_000]
        .iter()
        .map(|&m| quantile_mean_error(&Exp1, m))
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(errs[3] < 1e-3, "{errs:?}");
}

proptest! {
    #[test]
    fn qr_step_is_bounded_by_alpha(theta in -5.0..5.0f64, r in -5.0..5.0f64, tau in 0.01..0.99f64, alpha in 0.0..1.0f64) {
        let next = qr_update(theta, tau, r, alpha);
        prop_assert!((next - theta).abs() <= alpha);
        // it never moves away from the sample
        if r >= theta { prop_assert!(next >= theta); } else { prop_assert!(next < theta || alpha == 0.0); }
    }

    #[test]
    fn qr_stream_stays_in_hull(rs in prop::collection::vec(-2.0..2.0f64, 1..400), tau in 0.01..0.99f64, alpha in 0.001..0.5f64) {
        let mut theta = 0.0;
        for r in rs {
            theta = qr_update(theta, tau, r, alpha);
            prop_assert!((-2.0 - alpha..=2.0 + alpha).contains(&theta));
        }
    }

    #[test]
    fn huber_derivative_matches_finite_differences(x in -4.0..4.0f64, tau in 0.01..0.99f64, lambda in 0.1..3.0f64) {
        let p = HuberParams::new(lambda).unwrap();
        let h = 1e-6;
        let fd = (quantile_huber(x + h, tau, p).0 - quantile_huber(x - h, tau, p).0) / (2.0 * h);
        prop_assert!((fd - quantile_huber(x, tau, p).1).abs() < 1e-5);
        prop_assert!(quantile_huber(x, tau, p).0 >= 0.0);
    }

    #[test]
    fn softmax_is_a_distribution(prefs in prop::collection::vec(-50.0..50.0f64, 1..8)) {
        let p = softmax(&prefs);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn grad_log_prob_sums_to_zero_per_feature(seed in 0u64..1000, action in 0usize..3) {
        let mut pi = SoftmaxPolicy::zeros(3, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        pi.u.iter_mut().for_each(|u| *u = rand::Rng::random_range(&mut rng, -1.0..1.0));
        let g = pi.grad_log_prob(&[1, 4], action);
        for f in 0..6 {
            let total: f64 = (0..3).map(|a| g[a * 6 + f]).sum();
            prop_assert!(total.abs() < 1e-12);
        }
    }

    #[test]
    fn tile_coder_one_feature_per_tiling(x in -10.0..10.0f64, y in -10.0..10.0f64, tilings in 1usize..33, tiles in 1usize..9) {
        let c = TileCoder::new(tilings, vec![tiles, tiles], vec![(0.0, 1.0), (-8.0, 8.0)]).unwrap();
        let idx = c.active_indices(&[x, y]).unwrap();
        prop_assert_eq!(idx.len(), tilings);
        let per = tiles * tiles;
        for (k, i) in idx.iter().enumerate() {
            prop_assert!(*i >= k * per && *i < (k + 1) * per);
        }
    }

    #[test]
    fn random_mdp_text_round_trip(seed in 0u64..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mdp = random_unichain_mdp(3, 2, &[-1.0, 0.5, 2.0], &mut rng).unwrap();
        prop_assert_eq!(FiniteMdp::from_text(&mdp.to_text()).unwrap(), mdp);
    }

    #[test]
    fn stationary_distribution_is_invariant(seed in 0u64..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mdp = random_unichain_mdp(4, 2, &[0.0, 1.0], &mut rng).unwrap();
        let policy = PolicyTable::uniform(4, 2);
        let mu = stationary_distribution(&mdp, &policy).unwrap();
        let p = induced_chain(&mdp, &policy);
        for j in 0..4 {
            let flow: f64 = (0..4).map(|i| mu[i] * p[(i, j)]).sum();
            prop_assert!((flow - mu[j]).abs() < 1e-10);
        }
        prop_assert!((mu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
