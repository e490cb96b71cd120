//! Concrete environments: the used-car dealership, deterministic reward
//! cycles, and seeded random instances for property tests.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::rng::RngState;

/// Parameters of the dealership model: success rates `rho1`, `rho2` of
/// finding a car at the two markets and the resale values `r1`, `r2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CarDealershipParams {
    pub rho1: f64,
    pub rho2: f64,
    pub r1: f64,
    pub r2: f64,
}

impl CarDealershipParams {
    pub fn new(rho1: f64, rho2: f64, r1: f64, r2: f64) -> Result<Self> {
        let p = Self { rho1, rho2, r1, r2 };
        p.check()?;
        Ok(p)
    }

    /// `rho1 = 1/2, rho2 = 1/4, r1 = 5, r2 = 7`.
    pub fn reference() -> Self {
        Self {
            rho1: 0.5,
            rho2: 0.25,
            r1: 5.0,
            r2: 7.0,
        }
    }

    fn check(&self) -> Result<()> {
        for (name, rho) in [("rho1", self.rho1), ("rho2", self.rho2)] {
            if !(rho > 0.0 && rho <= 1.0) {
                return Err(Error::Parameter(format!("{name} must lie in (0,1], got {rho}")));
            }
        }
        for (name, r) in [("r1", self.r1), ("r2", self.r2)] {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::Parameter(format!("{name} must be finite and nonnegative, got {r}")));
            }
        }
        Ok(())
    }
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Five states `s_d, s_1, t_1, s_2, t_2`.
///
/// At the dealership `s_d` the agent picks market `a_1` or `a_2`. At market
/// `s_i` it keeps searching until a car is found (probability `rho_i` per
/// step), then `t_i` drives back to the dealership and sells for `r_i`.
pub fn car_dealership(params: &CarDealershipParams) -> Result<Mdp> {
    params.check()?;
    let CarDealershipParams { rho1, rho2, r1, r2 } = *params;
    let states = strings(&["s_d", "s_1", "t_1", "s_2", "t_2"]);
    let go = || vec!["go".to_string()];
    let actions = vec![strings(&["a_1", "a_2"]), go(), go(), go(), go()];
    let transition = vec![
        vec![vec![0.0, 1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 1.0, 0.0]],
        vec![vec![0.0, 1.0 - rho1, rho1, 0.0, 0.0]],
        vec![vec![1.0, 0.0, 0.0, 0.0, 0.0]],
        vec![vec![0.0, 0.0, 0.0, 1.0 - rho2, rho2]],
        vec![vec![1.0, 0.0, 0.0, 0.0, 0.0]],
    ];
    let reward = vec![vec![0.0, 0.0], vec![0.0], vec![r1], vec![0.0], vec![r2]];
    Mdp::new(states, actions, transition, reward)
}

/// A deterministic cycle `c1 -> c2 -> ... -> cn -> c1` with one action;
/// state `ck` pays `rewards[k-1]`.
pub fn periodic_chain(rewards: &[f64]) -> Result<Mdp> {
    if rewards.is_empty() {
        return Err(Error::Empty("reward cycle"));
    }
    let n = rewards.len();
    let states = (1..=n).map(|k| format!("c{k}")).collect();
    let actions = vec![vec!["next".to_string()]; n];
    let transition = (0..n)
        .map(|s| {
            let mut row = vec![0.0; n];
            row[(s + 1) % n] = 1.0;
            vec![row]
        })
        .collect();
    let reward = rewards.iter().map(|&r| vec![r]).collect();
    Mdp::new(states, actions, transition, reward)
}

/// One absorbing state with a single action paying `reward`.
pub fn single_state(reward: f64) -> Mdp {
    Mdp::new(
        vec!["s".into()],
        vec![vec!["stay".into()]],
        vec![vec![vec![1.0]]],
        vec![vec![reward]],
    )
    .expect("shapes agree")
}

/// Shape of a random test instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomMdpConfig {
    pub states: usize,
    /// Each state gets between 1 and `max_actions` actions.
    pub max_actions: usize,
    pub reward_range: (f64, f64),
    /// Probability that a transition entry is kept nonzero. `1.0` gives
    /// fully mixing rows, hence unichain and communicating models.
    pub density: f64,
}

/// Draws a random valid MDP. Rows are normalized random weights; every row
/// keeps at least one successor.
pub fn random_mdp(config: &RandomMdpConfig, rng: &mut RngState) -> Mdp {
    let n = config.states.max(1);
    let (lo, hi) = config.reward_range;
    let states = (0..n).map(|s| format!("s{s}")).collect();
    let mut actions = Vec::with_capacity(n);
    let mut transition = Vec::with_capacity(n);
    let mut reward = Vec::with_capacity(n);
    for _ in 0..n {
        let k = 1 + rng.below(config.max_actions.max(1));
        actions.push((0..k).map(|a| format!("a{a}")).collect());
        let mut rows = Vec::with_capacity(k);
        let mut rs = Vec::with_capacity(k);
        for _ in 0..k {
            let mut row: Vec<f64> = (0..n)
                .map(|_| {
                    let keep = rng.next_f64() < config.density;
                    let w = rng.next_f64();
                    if keep {
                        w + 1e-3
                    } else {
                        0.0
                    }
                })
                .collect();
            if row.iter().all(|&w| w == 0.0) {
                row[rng.below(n)] = 1.0;
            }
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|w| *w /= total);
            rows.push(row);
            rs.push(lo + (hi - lo) * rng.next_f64());
        }
        transition.push(rows);
        reward.push(rs);
    }
    Mdp::new(states, actions, transition, reward).expect("shapes agree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{solve_average, solve_discounted_depreciating, value_iteration_discounted};
    use crate::payoff::DiscountSpec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reference_instance_is_valid() {
        let m = car_dealership(&CarDealershipParams::reference()).unwrap();
        assert_eq!(m.n_states(), 5);
        assert_eq!(m.n_actions(0), 2);
        assert!(m.validate().is_empty());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(CarDealershipParams::new(0.0, 0.5, 1.0, 1.0).is_err());
        assert!(CarDealershipParams::new(0.5, 1.5, 1.0, 1.0).is_err());
        assert!(CarDealershipParams::new(0.5, 0.5, -1.0, 1.0).is_err());
        assert!(CarDealershipParams::new(0.5, 0.5, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn certain_markets_form_a_three_cycle() {
        let lambda: f64 = 0.9;
        let m = car_dealership(&CarDealershipParams::new(1.0, 1.0, 5.0, 1.0).unwrap()).unwrap();
        let (v, r) = value_iteration_discounted(&m, lambda, 1e-10).unwrap();
        assert_eq!(r.greedy_policy.action(0), 0);
        let expect = lambda.powi(2) * 5.0 / (1.0 - lambda.powi(3));
        assert_abs_diff_eq!(v.values[0], expect, epsilon = 1e-9);
    }

    #[test]
    fn worthless_cars_give_zero_values() {
        let m = car_dealership(&CarDealershipParams::new(0.3, 0.6, 0.0, 0.0).unwrap()).unwrap();
        let spec = DiscountSpec::new(0.7, 0.4).unwrap();
        let (v, _) = solve_discounted_depreciating(&m, &spec, 1e-10).unwrap();
        assert!(v.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn periodic_chain_values() {
        let m = periodic_chain(&[3.0, 4.0, 5.0]).unwrap();
        assert!(m.validate().is_empty());
        let spec = DiscountSpec::new(0.5, 0.5).unwrap();
        let (v, _) = solve_discounted_depreciating(&m, &spec, 1e-11).unwrap();
        assert_abs_diff_eq!(v.values[0], 200.0 / 21.0, epsilon = 1e-10);
        let (g, _) = solve_average(&m, 1e-11).unwrap();
        assert_abs_diff_eq!(g, 4.0, epsilon = 1e-10);
        assert!(periodic_chain(&[]).is_err());
    }

    #[test]
    fn singleton_cycle_is_self_loop() {
        let m = periodic_chain(&[2.0]).unwrap();
        assert_eq!(m.row(0, 0), &[1.0]);
        let spec = DiscountSpec::new(0.6, 0.3).unwrap();
        let (v, _) = solve_discounted_depreciating(&m, &spec, 1e-11).unwrap();
        assert_abs_diff_eq!(v.values[0], 2.0 / ((1.0 - 0.18) * 0.4), epsilon = 1e-10);
    }

    #[test]
    fn random_instances_are_valid() {
        let mut rng = RngState::new(3);
        for _ in 0..50 {
            let cfg = RandomMdpConfig {
                states: 1 + rng.below(6),
                max_actions: 3,
                reward_range: (-10.0, 10.0),
                density: 0.5,
            };
            assert!(random_mdp(&cfg, &mut rng).validate().is_empty());
        }
    }
}
