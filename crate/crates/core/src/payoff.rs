//! Arithmetic over finite reward sequences.
//!
//! A reward `r_k` received at step `k` is worth `r_k * gamma^(n-k)` at step
//! `n`; the asset total at step `n` is the sum of these. The discounted
//! depreciating payoff weights the `n`-th asset total by `lambda^(n-1)`, and
//! the average depreciating payoff is the Cesàro limit of the asset totals.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// The pair `(lambda, gamma)`: future discount and asset depreciation.
///
/// `lambda` lies in `(0, 1)`, `gamma` in `[0, 1)`. `gamma = 0` is the plain
/// discounted payoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscountSpec {
    lambda: f64,
    gamma: f64,
}

impl DiscountSpec {
    pub fn new(lambda: f64, gamma: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Parameter(format!("lambda must lie in (0,1), got {lambda}")));
        }
        check_gamma(gamma)?;
        Ok(Self { lambda, gamma })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `1 / (1 - lambda * gamma)`, the factor applied to immediate rewards.
    pub fn reward_scale(&self) -> f64 {
        1.0 / (1.0 - self.lambda * self.gamma)
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Parameter(format!("gamma must lie in [0,1), got {gamma}")));
    }
    Ok(())
}

fn check_open_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Parameter(format!("gamma must lie in (0,1), got {gamma}")));
    }
    Ok(())
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl core::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut k = KahanSum::new();
        for x in iter {
            k.add(x);
        }
        k
    }
}

/// Asset totals `values[n] = gamma * values[n-1] + r_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct AssetSeries {
    pub values: Vec<f64>,
}

pub fn asset_sequence(rewards: &[f64], gamma: f64) -> Result<AssetSeries> {
    check_gamma(gamma)?;
    let mut values = Vec::with_capacity(rewards.len());
    let mut acc = 0.0;
    for &r in rewards {
        acc = gamma * acc + r;
        values.push(acc);
    }
    Ok(AssetSeries { values })
}

/// A partial sum together with a bound on what truncation left out.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncated {
    pub partial_sum: f64,
    pub tail_bound: f64,
}

fn max_abs(rewards: &[f64]) -> f64 {
    rewards.iter().fold(0.0f64, |m, r| m.max(r.abs()))
}

/// Worst-case magnitude of `sum_{n>N} lambda^(n-1) * asset_n` when every
/// reward, past and future, is bounded by `reward_bound` in absolute value.
///
/// Uses `|asset_n| <= M (1 - gamma^n) / (1 - gamma)` and sums the two
/// geometric series exactly.
pub fn depreciating_tail_bound(reward_bound: f64, spec: &DiscountSpec, n: usize) -> f64 {
    let (l, g) = (spec.lambda, spec.gamma);
    let ln = libm::pow(l, n as f64);
    let gn1 = libm::pow(g, n as f64 + 1.0);
    let bracket = 1.0 / (1.0 - l) - gn1 / (1.0 - l * g);
    (reward_bound * ln * bracket / (1.0 - g)).max(0.0)
}

/// `sum_{n<=N} lambda^(n-1) * asset_n`, bounding the tail with the largest
/// reward magnitude found in `rewards`.
pub fn discounted_depreciating_truncated(rewards: &[f64], spec: &DiscountSpec) -> Result<Truncated> {
    discounted_depreciating_truncated_with_bound(rewards, spec, max_abs(rewards))
}

/// As [`discounted_depreciating_truncated`], with the tail bounded by an
/// externally known reward magnitude (for MDP paths: `max |R(s,a)|`).
pub fn discounted_depreciating_truncated_with_bound(
    rewards: &[f64],
    spec: &DiscountSpec,
    reward_bound: f64,
) -> Result<Truncated> {
    if rewards.is_empty() {
        return Err(Error::Empty("reward sequence"));
    }
    let mut sum = KahanSum::new();
    let mut weight = 1.0;
    let mut asset = 0.0;
    for &r in rewards {
        asset = spec.gamma * asset + r;
        sum.add(weight * asset);
        weight *= spec.lambda;
    }
    Ok(Truncated {
        partial_sum: sum.value(),
        tail_bound: depreciating_tail_bound(reward_bound, spec, rewards.len()),
    })
}

/// Plain `sum_{n<=N} lambda^(n-1) r_n` with tail bound `M lambda^N / (1 - lambda)`.
pub fn discounted_truncated(rewards: &[f64], lambda: f64) -> Result<Truncated> {
    if rewards.is_empty() {
        return Err(Error::Empty("reward sequence"));
    }
    let mut sum = KahanSum::new();
    let mut weight = 1.0;
    for &r in rewards {
        sum.add(weight * r);
        weight *= lambda;
    }
    Ok(Truncated {
        partial_sum: sum.value(),
        tail_bound: max_abs(rewards) * libm::pow(lambda, rewards.len() as f64) / (1.0 - lambda),
    })
}

/// The `N`-th Cesàro term `(1/N) sum_{k<=N} asset_k`.
pub fn average_depreciating_estimate(rewards: &[f64], gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if rewards.is_empty() {
        return Err(Error::Empty("reward sequence"));
    }
    let mut sum = KahanSum::new();
    let mut asset = 0.0;
    for &r in rewards {
        asset = gamma * asset + r;
        sum.add(asset);
    }
    Ok(sum.value() / rewards.len() as f64)
}

/// Closed form of the Cesàro term over a finite path:
/// `sum_k r_k (1 - gamma^(n+1-k)) / (n (1 - gamma))`.
pub fn cesaro_closed_form(rewards: &[f64], gamma: f64) -> Result<f64> {
    check_open_gamma(gamma)?;
    if rewards.is_empty() {
        return Err(Error::Empty("reward sequence"));
    }
    let n = rewards.len();
    let mut sum = KahanSum::new();
    // gamma^(n+1-k), walking k from n down to 1
    let mut pow = gamma;
    for &r in rewards.iter().rev() {
        sum.add(r * (1.0 - pow));
        pow *= gamma;
    }
    Ok(sum.value() / (n as f64 * (1.0 - gamma)))
}

/// The vanishing correction `sum_k r_k gamma^(n+1-k) / (n (1 - gamma))`.
pub fn cesaro_correction(rewards: &[f64], gamma: f64) -> Result<f64> {
    check_open_gamma(gamma)?;
    if rewards.is_empty() {
        return Err(Error::Empty("reward sequence"));
    }
    let n = rewards.len();
    let mut sum = KahanSum::new();
    let mut pow = gamma;
    for &r in rewards.iter().rev() {
        if pow == 0.0 {
            break;
        }
        sum.add(r * pow);
        pow *= gamma;
    }
    Ok(sum.value() / (n as f64 * (1.0 - gamma)))
}

/// Upper bound on `|cesaro_correction|` for rewards bounded by `reward_bound`:
/// `M (1 - gamma^n) gamma / (n (1 - gamma)^2)`.
pub fn cesaro_correction_bound(reward_bound: f64, gamma: f64, n: usize) -> f64 {
    let gn = libm::pow(gamma, n as f64);
    reward_bound * (1.0 - gn) * gamma / (n as f64 * (1.0 - gamma) * (1.0 - gamma))
}
