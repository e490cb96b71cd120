//! Solvers for finite Markov decision processes whose payoff is computed over
//! depreciating assets: every reward keeps contributing to later periods, but
//! its worth shrinks geometrically by a factor `gamma` per step, while the
//! future is discounted by `lambda`.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! core. Parsing, report files and the command-line front end live in the
//! companion `deprec` crate.
//!
//! Module map:
//!
//! - [`mdp`]: the model, stationary deterministic policies, validation,
//!   seeded sampling and chain-structure analysis.
//! - [`payoff`]: arithmetic over finite reward sequences.
//! - [`exact`]: value iteration, policy evaluation, average-payoff solvers
//!   and brute-force enumeration.
//! - [`lp`]: a dense two-phase simplex and the value / occupancy LPs.
//! - [`qlearning`]: tabular Q-learning with the depreciation-adjusted update.
//! - [`scenarios`]: the car-dealership MDP, periodic reward cycles and random
//!   test instances.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod exact;
mod linalg;
pub mod lp;
pub mod mdp;
pub mod payoff;
pub mod qlearning;
pub mod rng;
pub mod scenarios;

pub use error::{Error, Result};
pub use exact::{Criterion, Payoff, SolveReport, ValueVector};
pub use mdp::{Mdp, Policy, Trajectory, Violation};
pub use payoff::DiscountSpec;
pub use rng::RngState;
