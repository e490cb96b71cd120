use deprec_core::exact::{
    brute_force_optimal, policy_evaluation, solve_average_depreciating, solve_discounted_depreciating,
    tauberian_probe, value_iteration_discounted,
};
use deprec_core::mdp::DEFAULT_POLICY_CAP;
use deprec_core::payoff::{
    average_depreciating_estimate, discounted_depreciating_truncated, discounted_truncated, cesaro_closed_form,
};
use deprec_core::scenarios::{car_dealership, periodic_chain, random_mdp, CarDealershipParams, RandomMdpConfig};
use deprec_core::{DiscountSpec, Mdp, Payoff, Policy, RngState};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn random_instance(seed: u64, max_states: usize, max_actions: usize, density: f64) -> Mdp {
    let mut rng = RngState::new(seed);
    let cfg = RandomMdpConfig {
        states: 1 + rng.below(max_states),
        max_actions,
        reward_range: (-10.0, 10.0),
        density,
    };
    random_mdp(&cfg, &mut rng)
}

/// Best and runner-up lookahead at `s`, for deciding whether a greedy
/// comparison is meaningful.
fn action_gap(m: &Mdp, s: usize, v: &[f64], spec: &DiscountSpec) -> f64 {
    let mut q: Vec<f64> = (0..m.n_actions(s))
        .map(|a| m.reward(s, a) * spec.reward_scale() + spec.lambda() * m.expect(s, a, v))
        .collect();
    q.sort_by(|a, b| b.total_cmp(a));
    if q.len() < 2 {
        f64::INFINITY
    } else {
        q[0] - q[1]
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampling_is_a_function_of_its_inputs(seed in any::<u64>(), counter in 0u64..1_000_000, mseed in 0u64..1000) {
        let m = random_instance(mseed, 6, 3, 0.6);
        let s = (seed % m.n_states() as u64) as usize;
        let a = (counter % m.n_actions(s) as u64) as usize;
        let mut r1 = RngState::at(seed, counter);
        let mut r2 = RngState::at(seed, counter);
        prop_assert_eq!(m.sample_step(s, a, &mut r1).unwrap(), m.sample_step(s, a, &mut r2).unwrap());
        prop_assert_eq!(r1, r2);
    }

    #[test]
    fn policies_are_distinct_and_complete(mseed in 0u64..10_000) {
        let m = random_instance(mseed, 5, 3, 0.5);
        let p = m.enumerate_policies(DEFAULT_POLICY_CAP).unwrap();
        prop_assert_eq!(p.len() as u128, m.policy_count());
        let mut sorted = p.clone();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), p.len());
        prop_assert!(p.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn nonnegative_payoff_is_monotone(
        rewards in prop::collection::vec(0.0f64..10.0, 1..60),
        lambda in 0.05f64..0.95,
        g1 in 0.0f64..0.99,
        g2 in 0.0f64..0.99,
    ) {
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let a = discounted_depreciating_truncated(&rewards, &DiscountSpec::new(lambda, lo).unwrap()).unwrap();
        let b = discounted_depreciating_truncated(&rewards, &DiscountSpec::new(lambda, hi).unwrap()).unwrap();
        prop_assert!(a.partial_sum <= b.partial_sum * (1.0 + 1e-12) + 1e-12);
        let spec = DiscountSpec::new(lambda, lo).unwrap();
        let shorter = discounted_depreciating_truncated(&rewards[..rewards.len().div_ceil(2)], &spec).unwrap();
        prop_assert!(shorter.partial_sum <= a.partial_sum * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn scaling_identity_for_cauchy_products(
        pattern in prop::collection::vec(-5.0f64..5.0, 1..6),
        lambda in 0.1f64..0.9,
        gamma in 0.0f64..0.9,
    ) {
        let spec = DiscountSpec::new(lambda, gamma).unwrap();
        let rewards: Vec<f64> = pattern.iter().copied().cycle().take(400).collect();
        let dep = discounted_depreciating_truncated(&rewards, &spec).unwrap();
        let plain = discounted_truncated(&rewards, lambda).unwrap();
        let slack = dep.tail_bound + plain.tail_bound * spec.reward_scale() + 1e-9;
        prop_assert!((dep.partial_sum - plain.partial_sum * spec.reward_scale()).abs() <= slack);
    }
}

#[test]
fn sampled_paths_respect_support() {
    for mseed in 0..5 {
        let m = random_instance(mseed, 6, 3, 0.4);
        let policy = Policy::first_actions(&m);
        for seed in 0..1000 {
            let start = (seed as usize) % m.n_states();
            let tr = m.sample_trajectory(start, &policy, 20, seed).unwrap();
            let mut states: Vec<usize> = tr.steps.iter().map(|s| s.state).collect();
            states.push(tr.final_state);
            for (k, step) in tr.steps.iter().enumerate() {
                assert!(m.row(step.state, step.action)[states[k + 1]] > 0.0);
                assert_eq!(step.reward, m.reward(step.state, step.action));
            }
        }
    }
}

#[test]
fn empirical_success_rate_matches_row() {
    let m = car_dealership(&CarDealershipParams::reference()).unwrap();
    let s1 = m.state_index("s_1").unwrap();
    let t1 = m.state_index("t_1").unwrap();
    let mut rng = RngState::new(2024);
    let hits = (0..100_000).filter(|_| m.sample_step(s1, 0, &mut rng).unwrap().0 == t1).count();
    let freq = hits as f64 / 1e5;
    assert!((0.49..=0.51).contains(&freq), "frequency {freq}");
}

#[test]
fn cesaro_closed_form_on_random_paths() {
    let mut rng = RngState::new(11);
    for _ in 0..500 {
        let n = 1 + rng.below(200);
        let gamma = 0.01 + 0.98 * rng.next_f64();
        let rewards: Vec<f64> = (0..n).map(|_| 20.0 * rng.next_f64() - 10.0).collect();
        let m = rewards.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        let lhs = average_depreciating_estimate(&rewards, gamma).unwrap();
        let rhs = cesaro_closed_form(&rewards, gamma).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10 * n as f64 * m, "n={n} gamma={gamma}: {lhs} vs {rhs}");
    }
}

#[test]
fn greedy_policies_agree_across_solvers() {
    let mut rng = RngState::new(5);
    for mseed in 0..100 {
        let m = random_instance(mseed + 500, 6, 3, 0.6);
        let spec = DiscountSpec::new(0.05 + 0.85 * rng.next_f64(), 0.95 * rng.next_f64()).unwrap();
        let (dep, r1) = solve_discounted_depreciating(&m, &spec, TOL).unwrap();
        let (_, r2) = value_iteration_discounted(&m, spec.lambda(), TOL).unwrap();
        for s in 0..m.n_states() {
            if action_gap(&m, s, &dep.values, &spec) > 10.0 * TOL {
                assert_eq!(r1.greedy_policy.action(s), r2.greedy_policy.action(s));
            }
        }
    }
}

#[test]
fn brute_force_matches_fixed_point_on_small_models() {
    for seed in 0..100 {
        let mut rng = RngState::new(seed);
        let cfg = RandomMdpConfig {
            states: 3,
            max_actions: 2,
            reward_range: (-10.0, 10.0),
            density: 0.7,
        };
        let m = random_mdp(&cfg, &mut rng);
        let spec = DiscountSpec::new(0.1 + 0.8 * rng.next_f64(), 0.9 * rng.next_f64()).unwrap();
        let (bf, _) = brute_force_optimal(&m, Payoff::DiscountedDepreciating(spec), DEFAULT_POLICY_CAP).unwrap();
        let (vi, _) = solve_discounted_depreciating(&m, &spec, TOL).unwrap();
        assert!(bf.sup_distance(&vi.values) <= 2.0 * TOL, "seed {seed}");
    }
}

#[test]
fn monte_carlo_estimate_matches_car_value() {
    // independent of the Bellman machinery: average realized payoffs
    let m = car_dealership(&CarDealershipParams::reference()).unwrap();
    let spec = DiscountSpec::new(0.5, 0.5).unwrap();
    let policy = Policy::first_actions(&m);
    let bound = m.max_abs_reward();
    let runs = 40_000;
    let mut total = 0.0;
    let mut total_sq = 0.0;
    for seed in 0..runs {
        let tr = m.sample_trajectory(0, &policy, 60, seed).unwrap();
        let t = deprec_core::payoff::discounted_depreciating_truncated_with_bound(&tr.rewards(), &spec, bound).unwrap();
        assert!(t.tail_bound < 1e-15);
        total += t.partial_sum;
        total_sq += t.partial_sum * t.partial_sum;
    }
    let mean = total / runs as f64;
    let sd = (total_sq / runs as f64 - mean * mean).sqrt();
    let se = sd / (runs as f64).sqrt();
    assert!((mean - 40.0 / 33.0).abs() < 4.0 * se, "mean {mean} se {se}");
}

#[test]
fn tauberian_gap_shrinks_on_unichain_models() {
    let mut models = vec![
        car_dealership(&CarDealershipParams::reference()).unwrap(),
        periodic_chain(&[3.0, 4.0, 5.0]).unwrap(),
    ];
    models.extend((0..10).map(|s| random_instance(900 + s, 5, 2, 1.0)));
    for m in &models {
        let t = tauberian_probe(m, 0.5, &[0.99, 0.9999], 1e-10).unwrap();
        let (coarse, fine) = (t.rows[0].gap, t.rows[1].gap);
        let limit = t.limit.values[0].abs();
        assert!(fine <= 10.0 * coarse + 1e-12);
        assert!(fine <= 0.02 * (1.0 + limit));
        let (avg, _) = solve_average_depreciating(m, 0.5, 1e-10).unwrap();
        assert_eq!(avg, t.limit);
    }
}

#[test]
fn policy_evaluation_of_optimal_policy_reproduces_value() {
    for mseed in 0..30 {
        let m = random_instance(mseed + 50, 6, 3, 0.5);
        let spec = DiscountSpec::new(0.8, 0.4).unwrap();
        let (v, r) = solve_discounted_depreciating(&m, &spec, TOL).unwrap();
        let e = policy_evaluation(&m, &r.greedy_policy, Payoff::DiscountedDepreciating(spec)).unwrap();
        assert!(e.sup_distance(&v.values) <= 1e-8);
    }
}
