//! Dense two-phase simplex with Bland's rule, and the value / occupancy-measure
//! linear programs for the discounted depreciating criterion.
//!
//! Primal (value) LP, for positive state weights `x`:
//!
//! ```text
//! minimize   sum_s x_s v_s
//! subject to sum_t v_t (δ_st - λ T(t|s,a)) >= R(s,a) / (1 - λγ)   for all (s,a)
//! ```
//!
//! Dual (occupancy) LP:
//!
//! ```text
//! maximize   sum_(s,a) y_sa R(s,a) / (1 - λγ)
//! subject to sum_(t,a) y_ta (δ_st - λ T(s|t,a)) = x_s   for all s,   y >= 0
//! ```
//!
//! [`LpVariant::TransitionScaled`] instead divides the transition term by
//! `1 - λγ` as well. That program is not the relaxation of the Bellman
//! equation and its optimum disagrees with value iteration; it is kept to make
//! the difference observable.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exact::{greedy_discounted, Payoff, ValueVector};
use crate::mdp::{Mdp, Policy};
use crate::payoff::DiscountSpec;

pub const FEASIBILITY_TOLERANCE: f64 = 1e-7;
pub const PIVOT_TOLERANCE: f64 = 1e-10;
const OPTIMALITY_TOLERANCE: f64 = 1e-10;
/// Occupancy mass below this is treated as zero by [`policy_from_dual`].
pub const OCCUPANCY_THRESHOLD: f64 = 1e-9;
pub const DEFAULT_ITERATION_CAP: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// A dense LP: optimize `objective . x` subject to `rows[i] . x (rel) rhs[i]`
/// and `x_j >= lower[j]` where `lower[j]` is `Some`; `None` marks a free
/// variable.
#[derive(Clone, Debug, PartialEq)]
pub struct LpInstance {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub relations: Vec<Relation>,
    pub rhs: Vec<f64>,
    pub lower: Vec<Option<f64>>,
}

impl LpInstance {
    /// An instance with no constraints and nonnegative variables.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            rows: Vec::new(),
            relations: Vec::new(),
            rhs: Vec::new(),
            lower: vec![Some(0.0); n],
        }
    }

    pub fn with_lower_bounds(mut self, lower: Vec<Option<f64>>) -> Self {
        self.lower = lower;
        self
    }

    pub fn constraint(mut self, row: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        self.rows.push(row);
        self.relations.push(relation);
        self.rhs.push(rhs);
        self
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn check(&self) -> Result<()> {
        let n = self.n_vars();
        let m = self.rows.len();
        if self.relations.len() != m || self.rhs.len() != m || self.lower.len() != n {
            return Err(Error::Shape(format!(
                "LP with {m} rows has {} relations, {} right-hand sides, {} bounds for {n} variables",
                self.relations.len(),
                self.rhs.len(),
                self.lower.len()
            )));
        }
        if let Some(i) = self.rows.iter().position(|r| r.len() != n) {
            return Err(Error::Shape(format!("row {i} has length {} instead of {n}", self.rows[i].len())));
        }
        let finite = self.objective.iter().chain(self.rows.iter().flatten()).chain(&self.rhs).all(|x| x.is_finite())
            && self.lower.iter().flatten().all(|x| x.is_finite());
        if !finite {
            return Err(Error::Shape("LP coefficients must be finite".into()));
        }
        Ok(())
    }

    /// Largest constraint violation of `x` (bounds included).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for ((row, rel), b) in self.rows.iter().zip(&self.relations).zip(&self.rhs) {
            let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
            let v = match rel {
                Relation::Le => lhs - b,
                Relation::Ge => b - lhs,
                Relation::Eq => (lhs - b).abs(),
            };
            worst = worst.max(v);
        }
        for (l, v) in self.lower.iter().zip(x) {
            if let Some(l) = l {
                worst = worst.max(l - v);
            }
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// A column of the internal standard form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    /// Shifted nonnegative part of variable `j`.
    Structural(usize),
    /// Negative part of free variable `j`.
    Negated(usize),
    Slack(usize),
    Artificial(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Meaningful only when `status` is `Optimal`.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Basic columns at termination, one per remaining row.
    pub basis: Vec<Column>,
    pub pivots: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

struct Tableau {
    /// `m` rows of `cols + 1` entries; the last entry is the right-hand side.
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    kinds: Vec<Column>,
    pivots: usize,
    cap: usize,
}

enum Phase {
    Optimal,
    Unbounded,
    Capped,
}

impl Tableau {
    fn cols(&self) -> usize {
        self.kinds.len()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.cols() + 1;
        let p = self.a[r][c];
        for k in 0..width {
            self.a[r][k] /= p;
        }
        let pivot_row = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for k in 0..width {
                    row[k] -= f * pivot_row[k];
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Reduced costs for minimizing `cost`, last entry minus the objective.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let width = self.cols() + 1;
        let mut z: Vec<f64> = (0..width).map(|k| if k < cost.len() { cost[k] } else { 0.0 }).collect();
        for (row, &b) in self.a.iter().zip(&self.basis) {
            let cb = cost[b];
            if cb != 0.0 {
                for k in 0..width {
                    z[k] -= cb * row[k];
                }
            }
        }
        z
    }

    /// Primal simplex minimizing `cost` with Bland's rule. Columns with
    /// `enterable[j] == false` never enter.
    fn run(&mut self, cost: &[f64], enterable: &[bool]) -> Phase {
        let rhs = self.cols();
        loop {
            let z = self.reduced_costs(cost);
            let entering = (0..self.cols()).find(|&j| enterable[j] && z[j] < -OPTIMALITY_TOLERANCE);
            let Some(c) = entering else {
                return Phase::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.a.iter().enumerate() {
                if row[c] > PIVOT_TOLERANCE {
                    let ratio = row[rhs] / row[c];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((j, best)) => {
                            if ratio < best - 1e-12 || (ratio <= best + 1e-12 && self.basis[i] < self.basis[j]) {
                                Some((i, ratio))
                            } else {
                                Some((j, best))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Phase::Unbounded;
            };
            if self.pivots >= self.cap {
                return Phase::Capped;
            }
            self.pivot(r, c);
        }
    }
}

/// Solves `lp` with the two-phase primal simplex.
pub fn simplex_solve(lp: &LpInstance, iteration_cap: usize) -> Result<LpSolution> {
    lp.check()?;
    let n = lp.n_vars();
    let m = lp.n_constraints();

    let mut kinds = Vec::new();
    // per original variable: (positive column, optional negative column)
    let mut var_cols = Vec::with_capacity(n);
    for (j, l) in lp.lower.iter().enumerate() {
        let pos = kinds.len();
        kinds.push(Column::Structural(j));
        let neg = if l.is_none() {
            kinds.push(Column::Negated(j));
            Some(kinds.len() - 1)
        } else {
            None
        };
        var_cols.push((pos, neg));
    }
    let n_struct = kinds.len();

    // substitute lower bounds and make every right-hand side nonnegative
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let mut coeffs = vec![0.0; n_struct];
        let mut b = lp.rhs[i];
        for j in 0..n {
            let a = lp.rows[i][j];
            let (pos, neg) = var_cols[j];
            coeffs[pos] = a;
            if let Some(neg) = neg {
                coeffs[neg] = -a;
            }
            if let Some(l) = lp.lower[j] {
                b -= a * l;
            }
        }
        let mut rel = lp.relations[i];
        if b < 0.0 {
            b = -b;
            coeffs.iter_mut().for_each(|c| *c = -*c);
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        rows.push((coeffs, rel, b));
    }

    let mut slack_col = vec![None; m];
    for (i, (_, rel, _)) in rows.iter().enumerate() {
        if *rel != Relation::Eq {
            slack_col[i] = Some(kinds.len());
            kinds.push(Column::Slack(i));
        }
    }
    let mut art_col = vec![None; m];
    for (i, (_, rel, _)) in rows.iter().enumerate() {
        if *rel != Relation::Le {
            art_col[i] = Some(kinds.len());
            kinds.push(Column::Artificial(i));
        }
    }
    let cols = kinds.len();
    let mut a = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for (i, (coeffs, rel, b)) in rows.into_iter().enumerate() {
        let mut row = vec![0.0; cols + 1];
        row[..n_struct].copy_from_slice(&coeffs);
        if let Some(s) = slack_col[i] {
            row[s] = if rel == Relation::Le { 1.0 } else { -1.0 };
        }
        if let Some(art) = art_col[i] {
            row[art] = 1.0;
            basis.push(art);
        } else {
            basis.push(slack_col[i].expect("<= rows carry a slack"));
        }
        row[cols] = b;
        a.push(row);
    }
    let mut tab = Tableau {
        a,
        basis,
        kinds,
        pivots: 0,
        cap: iteration_cap,
    };
    let is_art: Vec<bool> = tab.kinds.iter().map(|k| matches!(k, Column::Artificial(_))).collect();

    let finish = |tab: &Tableau, status| LpSolution {
        status,
        x: vec![0.0; n],
        objective: 0.0,
        basis: tab.basis.iter().map(|&b| tab.kinds[b]).collect(),
        pivots: tab.pivots,
    };

    // phase one: drive the artificials to zero
    if is_art.iter().any(|&b| b) {
        let cost: Vec<f64> = is_art.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let all = vec![true; cols];
        match tab.run(&cost, &all) {
            Phase::Capped => return Ok(finish(&tab, LpStatus::IterationLimit)),
            Phase::Unbounded => unreachable!("phase one is bounded below by zero"),
            Phase::Optimal => {}
        }
        let infeasibility = -tab.reduced_costs(&cost)[cols];
        let scale = 1.0 + lp.rhs.iter().fold(0.0f64, |m, b| m.max(b.abs()));
        if infeasibility > FEASIBILITY_TOLERANCE * scale {
            return Ok(finish(&tab, LpStatus::Infeasible));
        }
        // pivot degenerate artificials out, dropping redundant rows
        let mut i = 0;
        while i < tab.a.len() {
            if is_art[tab.basis[i]] {
                let replacement = (0..cols).find(|&j| !is_art[j] && tab.a[i][j].abs() > PIVOT_TOLERANCE);
                match replacement {
                    Some(j) => tab.pivot(i, j),
                    None => {
                        tab.a.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    // phase two
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut cost = vec![0.0; cols];
    for j in 0..n {
        let (pos, neg) = var_cols[j];
        cost[pos] = sign * lp.objective[j];
        if let Some(neg) = neg {
            cost[neg] = -sign * lp.objective[j];
        }
    }
    let enterable: Vec<bool> = is_art.iter().map(|&b| !b).collect();
    let status = match tab.run(&cost, &enterable) {
        Phase::Optimal => LpStatus::Optimal,
        Phase::Unbounded => return Ok(finish(&tab, LpStatus::Unbounded)),
        Phase::Capped => return Ok(finish(&tab, LpStatus::IterationLimit)),
    };

    let mut col_value = vec![0.0; cols];
    for (row, &b) in tab.a.iter().zip(&tab.basis) {
        col_value[b] = row[cols];
    }
    let x: Vec<f64> = (0..n)
        .map(|j| {
            let (pos, neg) = var_cols[j];
            let mut v = col_value[pos];
            if let Some(neg) = neg {
                v -= col_value[neg];
            }
            v + lp.lower[j].unwrap_or(0.0)
        })
        .collect();
    let objective = lp.objective_value(&x);
    Ok(LpSolution {
        status,
        x,
        objective,
        basis: tab.basis.iter().map(|&b| tab.kinds[b]).collect(),
        pivots: tab.pivots,
    })
}

/// Which transition coefficient the MDP programs use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LpVariant {
    /// `δ_st - λ T`: the relaxation of the scaled Bellman equation.
    #[default]
    Consistent,
    /// `δ_st - λ T / (1 - λγ)`.
    TransitionScaled,
}

fn check_weights(mdp: &Mdp, weights: &[f64]) -> Result<()> {
    if weights.len() != mdp.n_states() {
        return Err(Error::Shape(format!(
            "{} weights for {} states",
            weights.len(),
            mdp.n_states()
        )));
    }
    if let Some((s, w)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::Parameter(format!("weight of state {s} must be positive, got {w}")));
    }
    Ok(())
}

fn transition_factor(spec: &DiscountSpec, variant: LpVariant) -> f64 {
    match variant {
        LpVariant::Consistent => spec.lambda(),
        LpVariant::TransitionScaled => spec.lambda() * spec.reward_scale(),
    }
}

/// The value LP; variable `s` is `v_s`, constraint `pair(s,a)` belongs to
/// `(s,a)`.
pub fn build_primal_lp(mdp: &Mdp, spec: &DiscountSpec, weights: &[f64], variant: LpVariant) -> Result<LpInstance> {
    mdp.ensure_valid()?;
    check_weights(mdp, weights)?;
    let n = mdp.n_states();
    let factor = transition_factor(spec, variant);
    let scale = spec.reward_scale();
    let mut lp = LpInstance::new(Sense::Minimize, weights.to_vec()).with_lower_bounds(vec![None; n]);
    for s in 0..n {
        for a in 0..mdp.n_actions(s) {
            let mut row: Vec<f64> = mdp.row(s, a).iter().map(|p| -factor * p).collect();
            row[s] += 1.0;
            lp = lp.constraint(row, Relation::Ge, scale * mdp.reward(s, a));
        }
    }
    Ok(lp)
}

/// The occupancy-measure LP; variable `pair(s,a)` is `y_sa`, constraint `s`
/// is the flow balance at `s`.
pub fn build_dual_lp(mdp: &Mdp, spec: &DiscountSpec, weights: &[f64], variant: LpVariant) -> Result<LpInstance> {
    mdp.ensure_valid()?;
    check_weights(mdp, weights)?;
    let n = mdp.n_states();
    let pairs = mdp.n_pairs();
    let factor = transition_factor(spec, variant);
    let scale = spec.reward_scale();
    let mut objective = vec![0.0; pairs];
    let mut rows = vec![vec![0.0; pairs]; n];
    for t in 0..n {
        for a in 0..mdp.n_actions(t) {
            let p = mdp.pair(t, a);
            objective[p] = scale * mdp.reward(t, a);
            for (s, &prob) in mdp.row(t, a).iter().enumerate() {
                rows[s][p] -= factor * prob;
            }
            rows[t][p] += 1.0;
        }
    }
    let mut lp = LpInstance::new(Sense::Maximize, objective);
    for (row, &w) in rows.into_iter().zip(weights) {
        lp = lp.constraint(row, Relation::Eq, w);
    }
    Ok(lp)
}

/// Picks, at every state, the action with the largest occupancy `y*_sa`
/// (lowest index on ties).
pub fn policy_from_dual(mdp: &Mdp, dual: &LpSolution) -> Result<Policy> {
    if !dual.is_optimal() {
        return Err(Error::Lp(format!("dual status is {:?}", dual.status)));
    }
    if dual.x.len() != mdp.n_pairs() {
        return Err(Error::Shape(format!(
            "dual has {} variables for {} state-action pairs",
            dual.x.len(),
            mdp.n_pairs()
        )));
    }
    let mut actions = Vec::with_capacity(mdp.n_states());
    for s in 0..mdp.n_states() {
        let mut best = (0, dual.x[mdp.pair(s, 0)]);
        for a in 1..mdp.n_actions(s) {
            let y = dual.x[mdp.pair(s, a)];
            if y > best.1 {
                best = (a, y);
            }
        }
        if best.1 <= OCCUPANCY_THRESHOLD {
            return Err(Error::DegenerateDual { state: s });
        }
        actions.push(best.0);
    }
    Ok(Policy::from_raw(actions))
}

/// Slack `sum_t v_t (δ_st - λT(t|s,a)) - R(s,a)/(1-λγ)` of every primal
/// constraint, indexed by pair.
pub fn primal_slacks(mdp: &Mdp, spec: &DiscountSpec, v: &[f64]) -> Vec<f64> {
    let scale = spec.reward_scale();
    let mut out = Vec::with_capacity(mdp.n_pairs());
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions(s) {
            out.push(v[s] - spec.lambda() * mdp.expect(s, a, v) - scale * mdp.reward(s, a));
        }
    }
    out
}

/// Result of [`solve_by_lp`].
#[derive(Clone, Debug, PartialEq)]
pub struct LpPlan {
    pub values: ValueVector,
    /// Greedy with respect to the primal values.
    pub greedy_policy: Policy,
    pub primal: LpSolution,
}

/// Solves the value LP with unit weights and reads off values and a greedy
/// policy.
pub fn solve_by_lp(mdp: &Mdp, spec: &DiscountSpec, variant: LpVariant) -> Result<LpPlan> {
    let weights = vec![1.0; mdp.n_states()];
    let lp = build_primal_lp(mdp, spec, &weights, variant)?;
    let primal = simplex_solve(&lp, DEFAULT_ITERATION_CAP)?;
    if !primal.is_optimal() {
        return Err(Error::Lp(format!("primal status is {:?}", primal.status)));
    }
    let greedy_policy = greedy_discounted(mdp, spec.lambda(), spec.reward_scale(), &primal.x);
    Ok(LpPlan {
        values: ValueVector {
            values: primal.x.clone(),
            payoff: Payoff::DiscountedDepreciating(*spec),
        },
        greedy_policy,
        primal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::solve_discounted_depreciating;
    use crate::scenarios::{car_dealership, single_state, CarDealershipParams};
    use approx::assert_abs_diff_eq;

    #[test]
    fn minimize_with_lower_constraint() {
        let lp = LpInstance::new(Sense::Minimize, vec![1.0]).constraint(vec![1.0], Relation::Ge, 3.0);
        let s = simplex_solve(&lp, 100).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_abs_diff_eq!(s.x[0], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn unbounded_detected() {
        let lp = LpInstance::new(Sense::Maximize, vec![1.0]).constraint(vec![1.0], Relation::Ge, 3.0);
        assert_eq!(simplex_solve(&lp, 100).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn infeasible_detected() {
        let lp = LpInstance::new(Sense::Minimize, vec![1.0])
            .constraint(vec![1.0], Relation::Ge, 3.0)
            .constraint(vec![1.0], Relation::Le, 2.0);
        assert_eq!(simplex_solve(&lp, 100).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn iteration_cap_reported() {
        let lp = LpInstance::new(Sense::Maximize, vec![1.0, 1.0])
            .constraint(vec![1.0, 2.0], Relation::Le, 4.0)
            .constraint(vec![3.0, 1.0], Relation::Le, 6.0);
        assert_eq!(simplex_solve(&lp, 0).unwrap().status, LpStatus::IterationLimit);
        let s = simplex_solve(&lp, 100).unwrap();
        assert_abs_diff_eq!(s.objective, 2.8, epsilon = 1e-12);
    }

    #[test]
    fn free_variables_and_equalities() {
        // maximize x with x - y = -4, y <= 1, both free
        let lp = LpInstance::new(Sense::Minimize, vec![-1.0, 0.0])
            .with_lower_bounds(vec![None, None])
            .constraint(vec![1.0, -1.0], Relation::Eq, -4.0)
            .constraint(vec![0.0, 1.0], Relation::Le, 1.0);
        let s = simplex_solve(&lp, 100).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_abs_diff_eq!(s.x[0], -3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.x[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn redundant_equality_rows_are_dropped() {
        let lp = LpInstance::new(Sense::Minimize, vec![1.0, 2.0])
            .constraint(vec![1.0, 1.0], Relation::Eq, 2.0)
            .constraint(vec![2.0, 2.0], Relation::Eq, 4.0);
        let s = simplex_solve(&lp, 100).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_abs_diff_eq!(s.objective, 2.0, epsilon = 1e-12);
        assert_eq!(s.basis.len(), 1);
    }

    #[test]
    fn malformed_instance_rejected() {
        let mut lp = LpInstance::new(Sense::Minimize, vec![1.0]).constraint(vec![1.0, 2.0], Relation::Ge, 3.0);
        assert!(simplex_solve(&lp, 10).is_err());
        lp.rows[0] = vec![f64::NAN];
        assert!(simplex_solve(&lp, 10).is_err());
    }

    #[test]
    fn single_state_primal_and_dual() {
        let (r, lambda, gamma) = (2.0, 0.6, 0.5);
        let spec = DiscountSpec::new(lambda, gamma).unwrap();
        let m = single_state(r);
        let expect = r / ((1.0 - lambda) * (1.0 - lambda * gamma));
        let p = simplex_solve(&build_primal_lp(&m, &spec, &[1.0], LpVariant::Consistent).unwrap(), 100).unwrap();
        assert_abs_diff_eq!(p.x[0], expect, epsilon = 1e-12);
        let d = simplex_solve(&build_dual_lp(&m, &spec, &[1.0], LpVariant::Consistent).unwrap(), 100).unwrap();
        assert_abs_diff_eq!(d.x[0] * (1.0 - lambda), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.objective, expect, epsilon = 1e-12);
        assert_eq!(policy_from_dual(&m, &d).unwrap().actions(), &[0]);
    }

    #[test]
    fn car_lp_matches_value_iteration() {
        let m = car_dealership(&CarDealershipParams::reference()).unwrap();
        let spec = DiscountSpec::new(0.5, 0.5).unwrap();
        let w = vec![1.0; 5];
        let p = simplex_solve(&build_primal_lp(&m, &spec, &w, LpVariant::Consistent).unwrap(), 1000).unwrap();
        assert_abs_diff_eq!(p.x[0], 40.0 / 33.0, epsilon = 1e-6);
        let d = simplex_solve(&build_dual_lp(&m, &spec, &w, LpVariant::Consistent).unwrap(), 1000).unwrap();
        assert_abs_diff_eq!(d.objective, p.x.iter().sum::<f64>(), epsilon = 1e-6);
        assert_eq!(policy_from_dual(&m, &d).unwrap().action(0), 0);
        let (vi, _) = solve_discounted_depreciating(&m, &spec, 1e-10).unwrap();
        assert!(vi.sup_distance(&p.x) <= 1e-6);
    }

    #[test]
    fn transition_scaled_variant_disagrees() {
        let m = car_dealership(&CarDealershipParams::reference()).unwrap();
        let spec = DiscountSpec::new(0.5, 0.5).unwrap();
        let plan = solve_by_lp(&m, &spec, LpVariant::TransitionScaled).unwrap();
        let (vi, _) = solve_discounted_depreciating(&m, &spec, 1e-10).unwrap();
        assert!(vi.sup_distance(&plan.values.values) > 1e-2);
    }

    #[test]
    fn zero_rewards_zero_values() {
        let m = car_dealership(&CarDealershipParams::new(0.5, 0.5, 0.0, 0.0).unwrap()).unwrap();
        let spec = DiscountSpec::new(0.5, 0.5).unwrap();
        let plan = solve_by_lp(&m, &spec, LpVariant::Consistent).unwrap();
        assert!(plan.values.values.iter().all(|v| v.abs() < 1e-12));
        let d = simplex_solve(&build_dual_lp(&m, &spec, &[1.0; 5], LpVariant::Consistent).unwrap(), 1000).unwrap();
        assert_eq!(d.status, LpStatus::Optimal);
        assert_abs_diff_eq!(d.objective, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_occupancy_action_is_never_selected() {
        let m = car_dealership(&CarDealershipParams::reference()).unwrap();
        let sol = LpSolution {
            status: LpStatus::Optimal,
            x: vec![1.0, 0.0, 1.0, 1.0, 1.0, 1.0],
            objective: 0.0,
            basis: Vec::new(),
            pivots: 0,
        };
        assert_eq!(policy_from_dual(&m, &sol).unwrap().action(0), 0);
        let mut degenerate = sol.clone();
        degenerate.x[2] = 0.0;
        assert_eq!(policy_from_dual(&m, &degenerate), Err(Error::DegenerateDual { state: 1 }));
    }

    #[test]
    fn bad_weights_rejected() {
        let m = single_state(1.0);
        let spec = DiscountSpec::new(0.5, 0.5).unwrap();
        assert!(build_primal_lp(&m, &spec, &[0.0], LpVariant::Consistent).is_err());
        assert!(build_dual_lp(&m, &spec, &[-1.0], LpVariant::Consistent).is_err());
    }
}
