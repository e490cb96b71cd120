//! Exact planning.
//!
//! The discounted depreciating value `V_λ^γ` solves
//!
//! ```text
//! V(s) = max_a  R(s,a) / (1 - λγ) + λ E_T[V(t) | s,a]
//! ```
//!
//! which is the ordinary discounted Bellman equation with every immediate
//! reward scaled by `1 / (1 - λγ)`. [`solve_discounted_depreciating`] iterates
//! that scaled operator directly and cross-checks the result against
//! `V_λ / (1 - λγ)` from [`value_iteration_discounted`].
//!
//! Average criteria assume every stationary deterministic policy is unichain;
//! the average depreciating value is then the optimal gain divided by
//! `1 - γ`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg;
use crate::mdp::{Mdp, Policy, DEFAULT_POLICY_CAP};
use crate::payoff::DiscountSpec;

/// Iteration cap shared by the fixed-point solvers.
pub const MAX_ITERATIONS: usize = 20_000_000;

/// Largest admissible discount factor for [`tauberian_probe`].
pub const TAUBERIAN_LAMBDA_LIMIT: f64 = 1.0 - 1e-6;

/// Default discount grid for [`tauberian_probe`].
pub const DEFAULT_TAUBERIAN_GRID: [f64; 4] = [0.9, 0.99, 0.999, 0.9999];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Criterion {
    Discounted,
    DiscountedDepreciating,
    Average,
    AverageDepreciating,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::Discounted => "discounted",
            Criterion::DiscountedDepreciating => "discounted-depreciating",
            Criterion::Average => "average",
            Criterion::AverageDepreciating => "average-depreciating",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A criterion together with the parameters it uses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Payoff {
    Discounted { lambda: f64 },
    DiscountedDepreciating(DiscountSpec),
    Average,
    AverageDepreciating { gamma: f64 },
}

impl Payoff {
    pub fn criterion(&self) -> Criterion {
        match self {
            Payoff::Discounted { .. } => Criterion::Discounted,
            Payoff::DiscountedDepreciating(_) => Criterion::DiscountedDepreciating,
            Payoff::Average => Criterion::Average,
            Payoff::AverageDepreciating { .. } => Criterion::AverageDepreciating,
        }
    }

    /// Builds the payoff for `criterion` from a full spec, dropping the
    /// parameters the criterion does not use.
    pub fn from_spec(criterion: Criterion, spec: &DiscountSpec) -> Self {
        match criterion {
            Criterion::Discounted => Payoff::Discounted { lambda: spec.lambda() },
            Criterion::DiscountedDepreciating => Payoff::DiscountedDepreciating(*spec),
            Criterion::Average => Payoff::Average,
            Criterion::AverageDepreciating => Payoff::AverageDepreciating { gamma: spec.gamma() },
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self {
            Payoff::Discounted { lambda } => Some(*lambda),
            Payoff::DiscountedDepreciating(s) => Some(s.lambda()),
            _ => None,
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            Payoff::DiscountedDepreciating(s) => Some(s.gamma()),
            Payoff::AverageDepreciating { gamma } => Some(*gamma),
            _ => None,
        }
    }
}

/// Per-state values tagged with the payoff they solve.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueVector {
    pub values: Vec<f64>,
    pub payoff: Payoff,
}

impl ValueVector {
    pub fn criterion(&self) -> Criterion {
        self.payoff.criterion()
    }

    pub fn sup_distance(&self, other: &[f64]) -> f64 {
        sup_distance(&self.values, other)
    }
}

/// Diagnostics of an iterative solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Sup-norm (span, for average criteria) of the last iterate difference.
    pub final_residual: f64,
    pub greedy_policy: Policy,
    /// For the depreciating solver: `sup |V_λ^γ - V_λ / (1 - λγ)|` against an
    /// independent plain value-iteration run.
    pub scaling_discrepancy: Option<f64>,
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Parameter(format!("lambda must lie in (0,1), got {lambda}")));
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// One-step lookahead `scale * R(s,a) + lambda * E[v | s,a]`.
#[inline]
fn lookahead(mdp: &Mdp, s: usize, a: usize, lambda: f64, scale: f64, v: &[f64]) -> f64 {
    scale * mdp.reward(s, a) + lambda * mdp.expect(s, a, v)
}

/// Argmax of `score` over the actions of `s`; the first maximum wins.
fn argmax(mdp: &Mdp, s: usize, mut score: impl FnMut(usize) -> f64) -> (usize, f64) {
    let mut best = (0, score(0));
    for a in 1..mdp.n_actions(s) {
        let q = score(a);
        if q > best.1 {
            best = (a, q);
        }
    }
    best
}

pub(crate) fn greedy_discounted(mdp: &Mdp, lambda: f64, scale: f64, v: &[f64]) -> Policy {
    Policy::from_raw(
        (0..mdp.n_states())
            .map(|s| argmax(mdp, s, |a| lookahead(mdp, s, a, lambda, scale, v)).0)
            .collect(),
    )
}

/// Value iteration on the scaled-reward operator. Stops once the iterate
/// residual drops to `tol (1 - λ) / (2λ)`, which bounds the distance of the
/// returned iterate from the fixed point by `tol / 2`.
fn value_iteration(mdp: &Mdp, lambda: f64, scale: f64, tol: f64) -> Result<(Vec<f64>, SolveReport)> {
    mdp.ensure_valid()?;
    check_lambda(lambda)?;
    check_tol(tol)?;
    let n = mdp.n_states();
    let threshold = tol * (1.0 - lambda) / (2.0 * lambda);
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    loop {
        let mut residual = 0.0f64;
        for s in 0..n {
            let (_, best) = argmax(mdp, s, |a| lookahead(mdp, s, a, lambda, scale, &v));
            residual = residual.max((best - v[s]).abs());
            next[s] = best;
        }
        core::mem::swap(&mut v, &mut next);
        iterations += 1;
        if residual <= threshold {
            let greedy_policy = greedy_discounted(mdp, lambda, scale, &v);
            return Ok((
                v,
                SolveReport {
                    iterations,
                    final_residual: residual,
                    greedy_policy,
                    scaling_discrepancy: None,
                },
            ));
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::IterationLimit { iterations, residual });
        }
    }
}

/// Optimal plain discounted value `V_λ` by value iteration.
pub fn value_iteration_discounted(mdp: &Mdp, lambda: f64, tol: f64) -> Result<(ValueVector, SolveReport)> {
    let (values, report) = value_iteration(mdp, lambda, 1.0, tol)?;
    Ok((
        ValueVector {
            values,
            payoff: Payoff::Discounted { lambda },
        },
        report,
    ))
}

/// Optimal discounted depreciating value `V_λ^γ` by iterating the
/// scaled-reward Bellman operator.
pub fn solve_discounted_depreciating(
    mdp: &Mdp,
    spec: &DiscountSpec,
    tol: f64,
) -> Result<(ValueVector, SolveReport)> {
    let scale = spec.reward_scale();
    let (values, mut report) = value_iteration(mdp, spec.lambda(), scale, tol)?;
    let (plain, _) = value_iteration(mdp, spec.lambda(), 1.0, tol / scale)?;
    let rescaled: Vec<f64> = plain.iter().map(|v| v * scale).collect();
    report.scaling_discrepancy = Some(sup_distance(&values, &rescaled));
    Ok((
        ValueVector {
            values,
            payoff: Payoff::DiscountedDepreciating(*spec),
        },
        report,
    ))
}

/// Solves `(I - λ T_π) v = scale * r_π` for a fixed policy.
fn evaluate_discounted(mdp: &Mdp, policy: &Policy, lambda: f64, scale: f64) -> Result<Vec<f64>> {
    let n = mdp.n_states();
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for s in 0..n {
        let act = policy.action(s);
        for (t, &p) in mdp.row(s, act).iter().enumerate() {
            a[s][t] = -lambda * p;
        }
        a[s][s] += 1.0;
        b[s] = scale * mdp.reward(s, act);
    }
    linalg::solve(a, b)
}

/// Long-run average reward of a unichain policy, from its stationary
/// distribution.
pub fn policy_gain(mdp: &Mdp, policy: &Policy) -> Result<f64> {
    let classes = mdp.recurrent_classes(policy);
    if classes.len() != 1 {
        return Err(Error::Multichain {
            witness: policy.actions().to_vec(),
            classes: classes.len(),
        });
    }
    let n = mdp.n_states();
    // rows of (P^T - I), the last one replaced by the normalization
    let mut a = vec![vec![0.0; n]; n];
    for s in 0..n {
        for (t, &p) in mdp.row(s, policy.action(s)).iter().enumerate() {
            a[t][s] += p;
        }
        a[s][s] -= 1.0;
    }
    a[n - 1] = vec![1.0; n];
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    let stationary = linalg::solve(a, b)?;
    Ok((0..n)
        .map(|s| stationary[s] * mdp.reward(s, policy.action(s)))
        .sum())
}

/// Value of a fixed stationary deterministic policy.
///
/// Discounted criteria are solved by a dense linear solve; average criteria
/// need the policy to be unichain and yield a constant vector.
pub fn policy_evaluation(mdp: &Mdp, policy: &Policy, payoff: Payoff) -> Result<ValueVector> {
    mdp.ensure_valid()?;
    let policy = Policy::new(mdp, policy.actions().to_vec())?;
    let n = mdp.n_states();
    let values = match payoff {
        Payoff::Discounted { lambda } => {
            check_lambda(lambda)?;
            evaluate_discounted(mdp, &policy, lambda, 1.0)?
        }
        Payoff::DiscountedDepreciating(spec) => {
            evaluate_discounted(mdp, &policy, spec.lambda(), spec.reward_scale())?
        }
        Payoff::Average => vec![policy_gain(mdp, &policy)?; n],
        Payoff::AverageDepreciating { gamma } => {
            check_open_gamma(gamma)?;
            vec![policy_gain(mdp, &policy)? / (1.0 - gamma); n]
        }
    };
    Ok(ValueVector { values, payoff })
}

fn check_open_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Parameter(format!("gamma must lie in (0,1), got {gamma}")));
    }
    Ok(())
}

/// Optimal gain by relative value iteration.
///
/// The chain is made aperiodic by mixing in a self-loop of weight 1/2, which
/// leaves gains unchanged. Stops when the span of the iterate difference is at
/// most `tol`; the returned gain is then within `tol / 2` of optimal.
pub fn solve_average(mdp: &Mdp, tol: f64) -> Result<(f64, SolveReport)> {
    const SELF_LOOP: f64 = 0.5;
    mdp.ensure_valid()?;
    check_tol(tol)?;
    mdp.check_unichain(DEFAULT_POLICY_CAP)?;
    let n = mdp.n_states();
    let reference = 0;
    let mut h = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    loop {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in 0..n {
            let (_, best) = argmax(mdp, s, |a| {
                mdp.reward(s, a) + SELF_LOOP * h[s] + (1.0 - SELF_LOOP) * mdp.expect(s, a, &h)
            });
            let diff = best - h[s];
            lo = lo.min(diff);
            hi = hi.max(diff);
            next[s] = best;
        }
        iterations += 1;
        let offset = next[reference];
        for (dst, src) in h.iter_mut().zip(&next) {
            *dst = src - offset;
        }
        let span = hi - lo;
        if span <= tol {
            let gain = 0.5 * (hi + lo);
            let greedy_policy = Policy::from_raw(
                (0..n)
                    .map(|s| argmax(mdp, s, |a| mdp.reward(s, a) + (1.0 - SELF_LOOP) * mdp.expect(s, a, &h)).0)
                    .collect(),
            );
            return Ok((
                gain,
                SolveReport {
                    iterations,
                    final_residual: span,
                    greedy_policy,
                    scaling_discrepancy: None,
                },
            ));
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::IterationLimit {
                iterations,
                residual: span,
            });
        }
    }
}

/// Optimal average depreciating value: the optimal gain over `1 - γ`, the
/// same at every state.
pub fn solve_average_depreciating(mdp: &Mdp, gamma: f64, tol: f64) -> Result<(ValueVector, SolveReport)> {
    check_open_gamma(gamma)?;
    let (gain, report) = solve_average(mdp, tol * (1.0 - gamma))?;
    Ok((
        ValueVector {
            values: vec![gain / (1.0 - gamma); mdp.n_states()],
            payoff: Payoff::AverageDepreciating { gamma },
        },
        report,
    ))
}

/// Howard policy iteration for `V_λ^γ`: exact up to the linear solves, and
/// well conditioned for `λ` close to 1 where value iteration would need
/// residuals below floating-point resolution.
pub fn policy_iteration_depreciating(mdp: &Mdp, spec: &DiscountSpec) -> Result<(ValueVector, Policy, usize)> {
    mdp.ensure_valid()?;
    let (lambda, scale) = (spec.lambda(), spec.reward_scale());
    let mut policy = Policy::first_actions(mdp);
    let mut rounds = 0;
    loop {
        rounds += 1;
        let v = evaluate_discounted(mdp, &policy, lambda, scale)?;
        let mut improved = false;
        let mut next = policy.actions().to_vec();
        for (s, slot) in next.iter_mut().enumerate() {
            let current = lookahead(mdp, s, *slot, lambda, scale, &v);
            let (a, best) = argmax(mdp, s, |a| lookahead(mdp, s, a, lambda, scale, &v));
            // switch only on a clear improvement so rounding cannot cycle
            if a != *slot && best > current + 1e-12 * (1.0 + current.abs()) {
                *slot = a;
                improved = true;
            }
        }
        if !improved {
            return Ok((
                ValueVector {
                    values: v,
                    payoff: Payoff::DiscountedDepreciating(*spec),
                },
                policy,
                rounds,
            ));
        }
        policy = Policy::from_raw(next);
        if rounds >= 10_000 {
            return Err(Error::IterationLimit {
                iterations: rounds,
                residual: f64::NAN,
            });
        }
    }
}

/// One row of a [`tauberian_probe`] table.
#[derive(Clone, Debug, PartialEq)]
pub struct TauberianRow {
    pub lambda: f64,
    /// `(1 - λ) V_λ^γ(s)` per state.
    pub scaled: Vec<f64>,
    /// `sup_s |(1 - λ) V_λ^γ(s) - V^γ(s)|`.
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TauberianTable {
    pub gamma: f64,
    pub rows: Vec<TauberianRow>,
    /// The average depreciating value the rows approach.
    pub limit: ValueVector,
}

/// Tabulates `(1 - λ) V_λ^γ` along a discount grid approaching 1, next to the
/// average depreciating value it converges to.
pub fn tauberian_probe(mdp: &Mdp, gamma: f64, lambdas: &[f64], tol: f64) -> Result<TauberianTable> {
    if lambdas.is_empty() {
        return Err(Error::Empty("lambda grid"));
    }
    for (i, &l) in lambdas.iter().enumerate() {
        if !(l > 0.0 && l < TAUBERIAN_LAMBDA_LIMIT) {
            return Err(Error::Parameter(format!(
                "grid value {l} outside (0, {TAUBERIAN_LAMBDA_LIMIT})"
            )));
        }
        if i > 0 && l <= lambdas[i - 1] {
            return Err(Error::Parameter("lambda grid must be strictly increasing".into()));
        }
    }
    let (limit, _) = solve_average_depreciating(mdp, gamma, tol)?;
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let spec = DiscountSpec::new(lambda, gamma)?;
        let (v, _, _) = policy_iteration_depreciating(mdp, &spec)?;
        let scaled: Vec<f64> = v.values.iter().map(|x| (1.0 - lambda) * x).collect();
        let gap = sup_distance(&scaled, &limit.values);
        rows.push(TauberianRow { lambda, scaled, gap });
    }
    Ok(TauberianTable { gamma, rows, limit })
}

/// Exhaustive search over stationary deterministic policies.
///
/// Returns the per-state maximum and the lexicographically first policy that
/// attains it everywhere (up to a relative `1e-10` slack for rounding).
pub fn brute_force_optimal(mdp: &Mdp, payoff: Payoff, cap: u128) -> Result<(ValueVector, Policy)> {
    mdp.ensure_valid()?;
    let n = mdp.n_states();
    let count = mdp.policy_count();
    if count > cap {
        return Err(Error::CapExceeded { count, cap });
    }
    let mut best = vec![f64::NEG_INFINITY; n];
    let mut evaluated: Vec<(Vec<usize>, Vec<f64>)> = Vec::with_capacity(count as usize);
    let mut failure = None;
    mdp.for_each_policy(cap, |p| {
        let policy = Policy::from_raw(p.to_vec());
        match policy_evaluation(mdp, &policy, payoff) {
            Ok(v) => {
                for (b, x) in best.iter_mut().zip(&v.values) {
                    *b = b.max(*x);
                }
                evaluated.push((policy.into_inner(), v.values));
                true
            }
            Err(e) => {
                failure = Some(e);
                false
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let scale = best.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let slack = 1e-10 * scale;
    let deficit = |v: &[f64]| best.iter().zip(v).fold(0.0f64, |m, (b, x)| m.max(b - x));
    let chosen = evaluated
        .iter()
        .find(|(_, v)| deficit(v) <= slack)
        .or_else(|| {
            evaluated
                .iter()
                .min_by(|a, b| deficit(&a.1).total_cmp(&deficit(&b.1)))
        })
        .map(|(p, _)| Policy::from_raw(p.clone()))
        .ok_or(Error::Empty("policy set"))?;
    Ok((ValueVector { values: best, payoff }, chosen))
}

/// `V_λ^γ` along a grid of depreciation factors, one row per `γ` in input
/// order.
pub fn depreciation_sweep(mdp: &Mdp, lambda: f64, gammas: &[f64], tol: f64) -> Result<Vec<(f64, Vec<f64>)>> {
    gammas
        .iter()
        .map(|&g| {
            let spec = DiscountSpec::new(lambda, g)?;
            let (v, _) = solve_discounted_depreciating(mdp, &spec, tol)?;
            Ok((g, v.values))
        })
        .collect()
}

/// `γ = 0.01, 0.02, ..., 0.99`.
pub fn default_gamma_grid() -> Vec<f64> {
    (1..100).map(|i| i as f64 / 100.0).collect()
}
