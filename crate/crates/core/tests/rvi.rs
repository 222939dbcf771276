use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use diffdist::envs::random_unichain_mdp;
use diffdist::oracle::{
    average_reward, bellman_span, optimality_residual, relative_value_iteration, PolicyTable,
};

#[test]
fn gain_is_best_deterministic_gain() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..20 {
        let mdp = random_unichain_mdp(4, 2, &[-1.0, 0.0, 2.0], &mut rng).unwrap();
        let sol = relative_value_iteration(&mdp).unwrap();
        let mut best = f64::NEG_INFINITY;
        for code in 0..16usize {
            let actions: Vec<usize> = (0..4).map(|s| (code >> s) & 1).collect();
            let pi = PolicyTable::deterministic(&actions, 2).unwrap();
            best = best.max(average_reward(&mdp, &pi).unwrap());
        }
        assert!((sol.rbar_star - best).abs() < 1e-8, "{} vs {best}", sol.rbar_star);
        assert!(optimality_residual(&mdp, &sol.q_star, sol.rbar_star) < 1e-8);
        assert!(bellman_span(&mdp, &sol.q_star) <= 1e-10);
        assert_eq!(sol.q_star.get(0, 0), 0.0);
    }
}

#[test]
fn greedy_policy_of_q_star_is_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let mdp = random_unichain_mdp(5, 3, &[0.0, 1.0], &mut rng).unwrap();
        let sol = relative_value_iteration(&mdp).unwrap();
        let greedy = PolicyTable::from_q(&sol.q_star, 0.0).unwrap();
        let gain = average_reward(&mdp, &greedy).unwrap();
        assert!((gain - sol.rbar_star).abs() < 1e-8);
    }
}
