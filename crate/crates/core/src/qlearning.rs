//! Tabular Q-learning for the discounted depreciating criterion.
//!
//! The update is the ordinary Watkins rule with the sampled reward scaled by
//! `1 / (1 - λγ)`:
//!
//! ```text
//! Q(s,a) += α (R(s,a) / (1 - λγ) + λ max_b Q(t,b) - Q(s,a))
//! ```
//!
//! Runs are continuing (no terminal states). Coverage comes from an ε-greedy
//! behaviour policy with a positive floor on ε and a uniformly random restart
//! every `restart_every` steps.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exact::{Criterion, Payoff, ValueVector};
use crate::mdp::{Mdp, Policy};
use crate::payoff::DiscountSpec;
use crate::rng::RngState;

pub const DEFAULT_RESTART_EVERY: u64 = 10_000;

/// Action-value estimates and visit counts for every state-action pair.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    offsets: Vec<usize>,
    values: Vec<f64>,
    visits: Vec<u64>,
}

impl QTable {
    /// A table shaped like `mdp` with every entry set to `init`.
    pub fn new(mdp: &Mdp, init: f64) -> Self {
        let offsets = (0..=mdp.n_states())
            .map(|s| if s == mdp.n_states() { mdp.n_pairs() } else { mdp.pair(s, 0) })
            .collect();
        Self {
            offsets,
            values: vec![init; mdp.n_pairs()],
            visits: vec![0; mdp.n_pairs()],
        }
    }

    pub fn n_states(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_actions(&self, state: usize) -> usize {
        self.offsets[state + 1] - self.offsets[state]
    }

    fn index(&self, state: usize, action: usize) -> Result<usize> {
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
        Ok(self.offsets[state] + action)
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[self.offsets[state] + action]
    }

    pub fn set(&mut self, state: usize, action: usize, value: f64) {
        let i = self.offsets[state] + action;
        self.values[i] = value;
    }

    pub fn visits(&self, state: usize, action: usize) -> u64 {
        self.visits[self.offsets[state] + action]
    }

    /// Entries of `state` in action order.
    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[self.offsets[state]..self.offsets[state + 1]]
    }

    /// All entries in pair order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `max_a Q(state, a)`.
    pub fn state_value(&self, state: usize) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn greedy_action(&self, state: usize) -> usize {
        let row = self.row(state);
        let mut best = 0;
        for a in 1..row.len() {
            if row[a] > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn sup_distance(&self, other: &QTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Per-state argmax of `q`, lowest action index on ties.
pub fn greedy_policy(q: &QTable) -> Policy {
    Policy::from_raw((0..q.n_states()).map(|s| q.greedy_action(s)).collect())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!("learning rate must lie in (0,1], got {alpha}")));
    }
    Ok(())
}

#[inline]
fn apply(q: &mut QTable, i: usize, reward_term: f64, lambda: f64, next: usize, alpha: f64) {
    let target = reward_term + lambda * q.state_value(next);
    q.values[i] += alpha * (target - q.values[i]);
    q.visits[i] += 1;
}

/// One depreciation-adjusted update of `Q(s,a)` after observing reward `r`
/// and successor `t`.
pub fn q_update(
    q: &mut QTable,
    s: usize,
    a: usize,
    r: f64,
    t: usize,
    alpha: f64,
    spec: &DiscountSpec,
) -> Result<()> {
    check_alpha(alpha)?;
    let i = q.index(s, a)?;
    q.index(t, 0)?;
    apply(q, i, r * spec.reward_scale(), spec.lambda(), t, alpha);
    Ok(())
}

/// The unscaled Watkins update for the plain discounted criterion.
pub fn q_update_standard(q: &mut QTable, s: usize, a: usize, r: f64, t: usize, alpha: f64, lambda: f64) -> Result<()> {
    check_alpha(alpha)?;
    let i = q.index(s, a)?;
    q.index(t, 0)?;
    apply(q, i, r, lambda, t, alpha);
    Ok(())
}

/// One synchronous update of every entry with the transition expectation in
/// place of a sample. The exact Q-table is a fixed point.
pub fn expected_q_update(q: &QTable, mdp: &Mdp, spec: &DiscountSpec, alpha: f64) -> QTable {
    let v: Vec<f64> = (0..q.n_states()).map(|s| q.state_value(s)).collect();
    let mut out = q.clone();
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions(s) {
            let target = mdp.reward(s, a) * spec.reward_scale() + spec.lambda() * mdp.expect(s, a, &v);
            let cur = q.get(s, a);
            out.set(s, a, cur + alpha * (target - cur));
        }
    }
    out
}

/// `Q(s,a) = R(s,a) / (1 - λγ) + λ E_T[v(t) | s,a]` from an optimal value
/// vector of the same spec.
pub fn exact_q_table(mdp: &Mdp, spec: &DiscountSpec, v: &ValueVector) -> Result<QTable> {
    match v.payoff {
        Payoff::DiscountedDepreciating(p) if p == *spec => {}
        Payoff::DiscountedDepreciating(_) => {
            return Err(Error::Parameter("value vector was computed for a different spec".into()))
        }
        other => {
            return Err(Error::CriterionMismatch {
                expected: Criterion::DiscountedDepreciating.name(),
                got: other.criterion().name(),
            })
        }
    }
    if v.values.len() != mdp.n_states() {
        return Err(Error::Shape(format!("{} values for {} states", v.values.len(), mdp.n_states())));
    }
    let mut q = QTable::new(mdp, 0.0);
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions(s) {
            q.set(
                s,
                a,
                mdp.reward(s, a) * spec.reward_scale() + spec.lambda() * mdp.expect(s, a, &v.values),
            );
        }
    }
    Ok(q)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CountingMode {
    /// `n` is the global step number.
    Global,
    /// `n` is the visit count of the updated pair, this visit included.
    #[default]
    PerPair,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateKind {
    /// `c / (n + n0)`.
    Harmonic,
    /// `c / (n + n0)^p`, `p` in `(1/2, 1]`.
    Polynomial { exponent: f64 },
    /// A fixed rate; violates `sum α² < ∞`.
    Constant,
}

/// Learning-rate sequence `α_n`, `n >= 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearningRateSchedule {
    kind: RateKind,
    c: f64,
    n0: f64,
    mode: CountingMode,
}

impl LearningRateSchedule {
    pub fn harmonic(c: f64, n0: f64, mode: CountingMode) -> Result<Self> {
        Self::checked(RateKind::Harmonic, c, n0, mode)
    }

    pub fn polynomial(c: f64, n0: f64, exponent: f64, mode: CountingMode) -> Result<Self> {
        if !(exponent > 0.5 && exponent <= 1.0) {
            return Err(Error::Parameter(format!(
                "exponent {exponent} outside (1/2, 1] violates the Robbins-Monro conditions"
            )));
        }
        Self::checked(RateKind::Polynomial { exponent }, c, n0, mode)
    }

    /// A constant rate. Rejected unless `allow_nonconvergent` is set, since
    /// it does not satisfy `sum α² < ∞`.
    pub fn constant(alpha: f64, allow_nonconvergent: bool) -> Result<Self> {
        if !allow_nonconvergent {
            return Err(Error::Parameter(
                "a constant learning rate violates the Robbins-Monro conditions".into(),
            ));
        }
        check_alpha(alpha)?;
        Ok(Self {
            kind: RateKind::Constant,
            c: alpha,
            n0: 0.0,
            mode: CountingMode::Global,
        })
    }

    fn checked(kind: RateKind, c: f64, n0: f64, mode: CountingMode) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) || !(n0 >= 0.0 && n0.is_finite()) {
            return Err(Error::Parameter(format!("need c > 0 and n0 >= 0, got c={c}, n0={n0}")));
        }
        let s = Self { kind, c, n0, mode };
        // rates decrease in n, so the first one is the largest
        check_alpha(s.rate(1))?;
        Ok(s)
    }

    pub fn kind(&self) -> RateKind {
        self.kind
    }

    pub fn mode(&self) -> CountingMode {
        self.mode
    }

    /// `α_n` for `n >= 1`.
    pub fn rate(&self, n: u64) -> f64 {
        let x = n as f64 + self.n0;
        match self.kind {
            RateKind::Harmonic => self.c / x,
            RateKind::Polynomial { exponent } => self.c / libm::pow(x, exponent),
            RateKind::Constant => self.c,
        }
    }

    /// Whether the sequence satisfies `sum α = ∞` and `sum α² < ∞`.
    pub fn is_robbins_monro(&self) -> bool {
        !matches!(self.kind, RateKind::Constant)
    }
}

/// `ε_n = max(ε_min, ε0 · decay^n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExplorationSchedule {
    eps0: f64,
    decay: f64,
    eps_min: f64,
}

impl ExplorationSchedule {
    pub fn new(eps0: f64, decay: f64, eps_min: f64) -> Result<Self> {
        if !(eps_min > 0.0 && eps_min <= 1.0) {
            return Err(Error::Parameter(format!("eps_min must lie in (0,1], got {eps_min}")));
        }
        if !(eps0 >= eps_min && eps0 <= 1.0) {
            return Err(Error::Parameter(format!("eps0 must lie in [eps_min,1], got {eps0}")));
        }
        if !(decay > 0.0 && decay <= 1.0) {
            return Err(Error::Parameter(format!("decay must lie in (0,1], got {decay}")));
        }
        Ok(Self { eps0, decay, eps_min })
    }

    /// A fixed exploration rate.
    pub fn constant(eps: f64) -> Result<Self> {
        Self::new(eps, 1.0, eps)
    }

    pub fn epsilon(&self, n: u64) -> f64 {
        (self.eps0 * libm::pow(self.decay, n as f64)).max(self.eps_min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum UpdateRule {
    #[default]
    Depreciating,
    /// The unscaled rule; only meaningful as a `γ = 0` comparison.
    Standard,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Initialization {
    #[default]
    Zero,
    /// `r_max / ((1 - λ)(1 - λγ))`, an upper bound on every Q-value.
    Optimistic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QLearningConfig {
    pub spec: DiscountSpec,
    pub learning_rate: LearningRateSchedule,
    pub exploration: ExplorationSchedule,
    pub steps: u64,
    pub seed: u64,
    pub restart_every: u64,
    /// Record a trace point every this many steps (0 disables).
    pub trace_every: u64,
    pub init: Initialization,
    pub rule: UpdateRule,
}

impl QLearningConfig {
    pub fn new(
        spec: DiscountSpec,
        learning_rate: LearningRateSchedule,
        exploration: ExplorationSchedule,
        steps: u64,
        seed: u64,
    ) -> Self {
        Self {
            spec,
            learning_rate,
            exploration,
            steps,
            seed,
            restart_every: DEFAULT_RESTART_EVERY,
            trace_every: 100_000,
            init: Initialization::Zero,
            rule: UpdateRule::Depreciating,
        }
    }
}

/// A periodic snapshot of a learning run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub step: u64,
    /// Sup-norm distance to the reference table, if one was given.
    pub sup_gap: Option<f64>,
    pub epsilon: f64,
    /// Learning rate of the most recent update.
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QLearnReport {
    pub steps: u64,
    pub final_gap: Option<f64>,
    pub greedy_policy: Policy,
    /// Realized discounted depreciating return of each restart segment.
    pub episode_returns: Vec<f64>,
    pub trace: Vec<TracePoint>,
    pub warnings: Vec<String>,
}

/// Runs continuing ε-greedy Q-learning on `mdp`. Deterministic given the
/// config (seed included).
pub fn run_q_learning(mdp: &Mdp, config: &QLearningConfig, reference: Option<&QTable>) -> Result<(QTable, QLearnReport)> {
    mdp.ensure_valid()?;
    if config.steps == 0 {
        return Err(Error::Parameter("steps must be at least 1".into()));
    }
    if config.restart_every == 0 {
        return Err(Error::Parameter("restart_every must be at least 1".into()));
    }
    if let Some(r) = reference {
        if r.values.len() != mdp.n_pairs() || r.n_states() != mdp.n_states() {
            return Err(Error::Shape("reference table does not match the MDP".into()));
        }
    }
    let spec = &config.spec;
    let (lambda, gamma) = (spec.lambda(), spec.gamma());
    let reward_scale = match config.rule {
        UpdateRule::Depreciating => spec.reward_scale(),
        UpdateRule::Standard => 1.0,
    };
    let mut warnings = Vec::new();
    if !mdp.is_communicating() {
        warnings.push(String::from(
            "MDP is not communicating under uniform action choice; some pairs may be visited finitely often",
        ));
    }
    if !config.learning_rate.is_robbins_monro() {
        warnings.push(String::from("learning rate does not satisfy the Robbins-Monro conditions"));
    }
    let init = match config.init {
        Initialization::Zero => 0.0,
        Initialization::Optimistic => {
            let (_, hi) = mdp.reward_bounds();
            hi * reward_scale / (1.0 - lambda)
        }
    };
    let mut q = QTable::new(mdp, init);
    let mut rng = RngState::new(config.seed);
    let n = mdp.n_states();
    let mut state = rng.below(n);

    let mut episode_returns = Vec::new();
    let mut ret = 0.0;
    let mut asset = 0.0;
    let mut weight = 1.0;
    let mut trace = Vec::new();

    for step in 0..config.steps {
        if step > 0 && step % config.restart_every == 0 {
            episode_returns.push(ret);
            ret = 0.0;
            asset = 0.0;
            weight = 1.0;
            state = rng.below(n);
        }
        let eps = config.exploration.epsilon(step);
        let action = if rng.next_f64() < eps {
            rng.below(mdp.n_actions(state))
        } else {
            q.greedy_action(state)
        };
        let (next, reward) = mdp.sample_step(state, action, &mut rng)?;
        let i = q.offsets[state] + action;
        let count = match config.learning_rate.mode() {
            CountingMode::Global => step + 1,
            CountingMode::PerPair => q.visits[i] + 1,
        };
        let alpha = config.learning_rate.rate(count);
        apply(&mut q, i, reward * reward_scale, lambda, next, alpha);

        asset = gamma * asset + reward;
        ret += weight * asset;
        weight *= lambda;

        if config.trace_every > 0 && (step + 1) % config.trace_every == 0 {
            trace.push(TracePoint {
                step: step + 1,
                sup_gap: reference.map(|r| q.sup_distance(r)),
                epsilon: eps,
                alpha,
            });
        }
        state = next;
    }
    episode_returns.push(ret);

    let report = QLearnReport {
        steps: config.steps,
        final_gap: reference.map(|r| q.sup_distance(r)),
        greedy_policy: greedy_policy(&q),
        episode_returns,
        trace,
        warnings,
    };
    Ok((q, report))
}
