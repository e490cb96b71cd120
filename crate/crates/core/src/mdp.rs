//! Finite MDP model, stationary deterministic policies, seeded sampling and
//! chain-structure queries.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::rng::RngState;

/// Absolute tolerance on every transition row sum.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Default cap on `|A|^|S|` for policy enumeration.
pub const DEFAULT_POLICY_CAP: u128 = 1_000_000;

/// A finite MDP with per-state action sets.
///
/// State-action pairs are numbered densely: pair `offsets[s] + a` is action
/// `a` of state `s`. The transition table stores one row of length `|S|` per
/// pair. Construction checks only that the shapes agree; probability and
/// reward sanity is reported by [`Mdp::validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct Mdp {
    states: Vec<String>,
    actions: Vec<Vec<String>>,
    offsets: Vec<usize>,
    transition: Vec<f64>,
    reward: Vec<f64>,
}

/// One way in which an [`Mdp`] fails the definition.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NoStates,
    EmptyActionSet {
        state: usize,
    },
    RowSum {
        state: usize,
        action: usize,
        sum: f64,
    },
    NegativeProbability {
        state: usize,
        action: usize,
        next: usize,
        value: f64,
    },
    ProbabilityAboveOne {
        state: usize,
        action: usize,
        next: usize,
        value: f64,
    },
    NonFiniteProbability {
        state: usize,
        action: usize,
        next: usize,
    },
    NonFiniteReward {
        state: usize,
        action: usize,
    },
}

impl Violation {
    /// Short machine-friendly tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::NoStates => "no-states",
            Violation::EmptyActionSet { .. } => "empty-action-set",
            Violation::RowSum { .. } => "row-sum",
            Violation::NegativeProbability { .. } => "negative-probability",
            Violation::ProbabilityAboveOne { .. } => "probability-above-one",
            Violation::NonFiniteProbability { .. } => "non-finite-probability",
            Violation::NonFiniteReward { .. } => "non-finite-reward",
        }
    }

    /// The `(state, action)` pair the violation is about, if any.
    pub fn pair(&self) -> Option<(usize, usize)> {
        match *self {
            Violation::NoStates | Violation::EmptyActionSet { .. } => None,
            Violation::RowSum { state, action, .. }
            | Violation::NegativeProbability { state, action, .. }
            | Violation::ProbabilityAboveOne { state, action, .. }
            | Violation::NonFiniteProbability { state, action, .. }
            | Violation::NonFiniteReward { state, action } => Some((state, action)),
        }
    }

    pub fn state(&self) -> Option<usize> {
        match *self {
            Violation::EmptyActionSet { state } => Some(state),
            _ => self.pair().map(|(s, _)| s),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::NoStates => write!(f, "no-states: the state set is empty"),
            Violation::EmptyActionSet { state } => {
                write!(f, "empty-action-set: state {state} has no actions")
            }
            Violation::RowSum { state, action, sum } => write!(
                f,
                "row-sum: T(.|{state},{action}) sums to {sum}, expected 1"
            ),
            Violation::NegativeProbability {
                state,
                action,
                next,
                value,
            } => write!(
                f,
                "negative-probability: T({next}|{state},{action}) = {value}"
            ),
            Violation::ProbabilityAboveOne {
                state,
                action,
                next,
                value,
            } => write!(
                f,
                "probability-above-one: T({next}|{state},{action}) = {value}"
            ),
            Violation::NonFiniteProbability {
                state,
                action,
                next,
            } => write!(f, "non-finite-probability: T({next}|{state},{action})"),
            Violation::NonFiniteReward { state, action } => {
                write!(f, "non-finite-reward: R({state},{action})")
            }
        }
    }
}

impl Mdp {
    /// Builds an MDP from nested tables: `transition[s][a][t]` and
    /// `reward[s][a]`, with `actions[s]` naming the actions of state `s`.
    pub fn new(
        states: Vec<String>,
        actions: Vec<Vec<String>>,
        transition: Vec<Vec<Vec<f64>>>,
        reward: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = states.len();
        if actions.len() != n || transition.len() != n || reward.len() != n {
            return Err(Error::Shape(format!(
                "{n} states but {} action lists, {} transition blocks, {} reward rows",
                actions.len(),
                transition.len(),
                reward.len()
            )));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut flat_t = Vec::new();
        let mut flat_r = Vec::new();
        offsets.push(0);
        for s in 0..n {
            let k = actions[s].len();
            if transition[s].len() != k || reward[s].len() != k {
                return Err(Error::Shape(format!(
                    "state {s}: {k} actions but {} transition rows and {} rewards",
                    transition[s].len(),
                    reward[s].len()
                )));
            }
            for (a, row) in transition[s].iter().enumerate() {
                if row.len() != n {
                    return Err(Error::Shape(format!(
                        "row ({s},{a}) has length {} instead of {n}",
                        row.len()
                    )));
                }
                flat_t.extend_from_slice(row);
            }
            flat_r.extend_from_slice(&reward[s]);
            offsets.push(offsets[s] + k);
        }
        Ok(Self {
            states,
            actions,
            offsets,
            transition: flat_t,
            reward: flat_r,
        })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self, state: usize) -> usize {
        self.actions[state].len()
    }

    /// Largest per-state action count.
    pub fn max_actions(&self) -> usize {
        self.actions.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Total number of state-action pairs.
    pub fn n_pairs(&self) -> usize {
        self.reward.len()
    }

    /// Dense index of the pair `(state, action)`.
    #[inline]
    pub fn pair(&self, state: usize, action: usize) -> usize {
        self.offsets[state] + action
    }

    pub fn state_name(&self, state: usize) -> &str {
        &self.states[state]
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn action_name(&self, state: usize, action: usize) -> &str {
        &self.actions[state][action]
    }

    pub fn action_names(&self, state: usize) -> &[String] {
        &self.actions[state]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn action_index(&self, state: usize, name: &str) -> Option<usize> {
        self.actions[state].iter().position(|a| a == name)
    }

    /// `T(.|state, action)` in state order.
    #[inline]
    pub fn row(&self, state: usize, action: usize) -> &[f64] {
        let n = self.n_states();
        let p = self.pair(state, action);
        &self.transition[p * n..(p + 1) * n]
    }

    #[inline]
    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.reward[self.pair(state, action)]
    }

    /// `E_T[f(t) | state, action]`.
    #[inline]
    pub fn expect(&self, state: usize, action: usize, f: &[f64]) -> f64 {
        self.row(state, action)
            .iter()
            .zip(f)
            .map(|(p, v)| p * v)
            .sum()
    }

    /// `(r_min, r_max)` over all state-action pairs; `(0, 0)` when there are none.
    pub fn reward_bounds(&self) -> (f64, f64) {
        if self.reward.is_empty() {
            return (0.0, 0.0);
        }
        self.reward
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                (lo.min(r), hi.max(r))
            })
    }

    pub fn max_abs_reward(&self) -> f64 {
        let (lo, hi) = self.reward_bounds();
        lo.abs().max(hi.abs())
    }

    /// Every way the model departs from the definition; empty when valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.states.is_empty() {
            out.push(Violation::NoStates);
        }
        for s in 0..self.n_states() {
            if self.actions[s].is_empty() {
                out.push(Violation::EmptyActionSet { state: s });
            }
            for a in 0..self.n_actions(s) {
                let mut finite = true;
                for (t, &p) in self.row(s, a).iter().enumerate() {
                    if !p.is_finite() {
                        finite = false;
                        out.push(Violation::NonFiniteProbability {
                            state: s,
                            action: a,
                            next: t,
                        });
                    } else if p < 0.0 {
                        out.push(Violation::NegativeProbability {
                            state: s,
                            action: a,
                            next: t,
                            value: p,
                        });
                    } else if p > 1.0 {
                        out.push(Violation::ProbabilityAboveOne {
                            state: s,
                            action: a,
                            next: t,
                            value: p,
                        });
                    }
                }
                if finite {
                    let sum: f64 = self.row(s, a).iter().sum();
                    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                        out.push(Violation::RowSum {
                            state: s,
                            action: a,
                            sum,
                        });
                    }
                }
                if !self.reward(s, a).is_finite() {
                    out.push(Violation::NonFiniteReward {
                        state: s,
                        action: a,
                    });
                }
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidMdp(v))
        }
    }

    fn check_pair(&self, state: usize, action: usize) -> Result<()> {
        if state >= self.n_states() {
            return Err(Error::OutOfRange {
                what: "state",
                index: state,
                limit: self.n_states(),
            });
        }
        if action >= self.n_actions(state) {
            return Err(Error::OutOfRange {
                what: "action",
                index: action,
                limit: self.n_actions(state),
            });
        }
        Ok(())
    }

    /// Draws a successor by inverse CDF over `T(.|state, action)` in state
    /// order. Returns the successor and `R(state, action)`.
    pub fn sample_step(
        &self,
        state: usize,
        action: usize,
        rng: &mut RngState,
    ) -> Result<(usize, f64)> {
        self.check_pair(state, action)?;
        let u = rng.next_f64();
        Ok((self.inverse_cdf(state, action, u), self.reward(state, action)))
    }

    pub(crate) fn inverse_cdf(&self, state: usize, action: usize, u: f64) -> usize {
        let row = self.row(state, action);
        let mut acc = 0.0;
        let mut last = 0;
        for (t, &p) in row.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = t;
                if u < acc {
                    return t;
                }
            }
        }
        // row sums a hair below one
        last
    }

    /// Follows `policy` for `len` steps from `start` using the stream `seed`.
    pub fn sample_trajectory(
        &self,
        start: usize,
        policy: &Policy,
        len: usize,
        seed: u64,
    ) -> Result<Trajectory> {
        let mut rng = RngState::new(seed);
        let mut steps = Vec::with_capacity(len);
        let mut s = start;
        for _ in 0..len {
            let a = policy.action(s);
            let (t, r) = self.sample_step(s, a, &mut rng)?;
            steps.push(Step {
                state: s,
                action: a,
                reward: r,
            });
            s = t;
        }
        Ok(Trajectory {
            steps,
            final_state: s,
            rng_seed: seed,
        })
    }

    /// Number of stationary deterministic policies, saturating.
    pub fn policy_count(&self) -> u128 {
        self.actions
            .iter()
            .fold(1u128, |acc, a| acc.saturating_mul(a.len() as u128))
    }

    /// All stationary deterministic policies in lexicographic order (state 0
    /// most significant).
    pub fn enumerate_policies(&self, cap: u128) -> Result<Vec<Policy>> {
        let count = self.policy_count();
        if count > cap {
            return Err(Error::CapExceeded { count, cap });
        }
        let mut out = Vec::with_capacity(count as usize);
        self.for_each_policy(cap, |p| {
            out.push(Policy(p.to_vec()));
            true
        })?;
        Ok(out)
    }

    /// Visits every policy in lexicographic order without materializing the
    /// list; stops early when `visit` returns `false`.
    pub fn for_each_policy(&self, cap: u128, mut visit: impl FnMut(&[usize]) -> bool) -> Result<()> {
        let count = self.policy_count();
        if count > cap {
            return Err(Error::CapExceeded { count, cap });
        }
        if count == 0 {
            return Ok(());
        }
        let n = self.n_states();
        let mut current = vec![0usize; n];
        loop {
            if !visit(&current) {
                return Ok(());
            }
            let mut i = n;
            loop {
                if i == 0 {
                    return Ok(());
                }
                i -= 1;
                current[i] += 1;
                if current[i] < self.n_actions(i) {
                    break;
                }
                current[i] = 0;
            }
        }
    }

    fn successors(&self, state: usize, actions: &[usize]) -> impl Iterator<Item = usize> + '_ {
        let n = self.n_states();
        let mut seen = vec![false; n];
        for &a in actions {
            for (t, &p) in self.row(state, a).iter().enumerate() {
                if p > 0.0 {
                    seen[t] = true;
                }
            }
        }
        (0..n).filter(move |&t| seen[t])
    }

    fn reachability(&self, choose: impl Fn(usize) -> Vec<usize>) -> Vec<Vec<bool>> {
        let n = self.n_states();
        let adj: Vec<Vec<usize>> = (0..n).map(|s| self.successors(s, &choose(s)).collect()).collect();
        let mut reach = vec![vec![false; n]; n];
        let mut queue = VecDeque::new();
        for (s, row) in reach.iter_mut().enumerate() {
            row[s] = true;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if !row[v] {
                        row[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        reach
    }

    /// Closed recurrent classes of the chain induced by `policy`, each sorted,
    /// ordered by smallest member.
    pub fn recurrent_classes(&self, policy: &Policy) -> Vec<Vec<usize>> {
        let n = self.n_states();
        let reach = self.reachability(|s| vec![policy.action(s)]);
        let mut assigned = vec![false; n];
        let mut classes = Vec::new();
        for s in 0..n {
            if assigned[s] {
                continue;
            }
            // s is recurrent iff everything it reaches reaches back
            let recurrent = (0..n).all(|t| !reach[s][t] || reach[t][s]);
            if recurrent {
                let class: Vec<usize> = (0..n).filter(|&t| reach[s][t]).collect();
                for &t in &class {
                    assigned[t] = true;
                }
                classes.push(class);
            }
        }
        classes
    }

    /// Checks that every stationary deterministic policy induces a single
    /// closed recurrent class. Enumerates policies, so it is bounded by `cap`.
    pub fn check_unichain(&self, cap: u128) -> Result<()> {
        let mut witness = None;
        self.for_each_policy(cap, |p| {
            let policy = Policy(p.to_vec());
            let classes = self.recurrent_classes(&policy).len();
            if classes > 1 {
                witness = Some((policy.0, classes));
                false
            } else {
                true
            }
        })?;
        match witness {
            Some((witness, classes)) => Err(Error::Multichain { witness, classes }),
            None => Ok(()),
        }
    }

    /// Whether every state reaches every other state when actions are chosen
    /// uniformly at random.
    pub fn is_communicating(&self) -> bool {
        let reach = self.reachability(|s| (0..self.n_actions(s)).collect());
        reach.iter().all(|row| row.iter().all(|&b| b))
    }
}

/// A stationary deterministic policy: one action index per state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Policy(Vec<usize>);

impl Policy {
    /// Checks that every entry is a valid action of its state.
    pub fn new(mdp: &Mdp, actions: Vec<usize>) -> Result<Self> {
        if actions.len() != mdp.n_states() {
            return Err(Error::Shape(format!(
                "policy has {} entries for {} states",
                actions.len(),
                mdp.n_states()
            )));
        }
        for (s, &a) in actions.iter().enumerate() {
            mdp.check_pair(s, a)?;
        }
        Ok(Self(actions))
    }

    /// The policy taking action 0 everywhere.
    pub fn first_actions(mdp: &Mdp) -> Self {
        Self(vec![0; mdp.n_states()])
    }

    #[inline]
    pub fn action(&self, state: usize) -> usize {
        self.0[state]
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    pub(crate) fn from_raw(actions: Vec<usize>) -> Self {
        Self(actions)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
}

/// A sampled finite path together with the seed that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    /// State reached after the last step.
    pub final_state: usize,
    pub rng_seed: u64,
}

impl Trajectory {
    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }
}
