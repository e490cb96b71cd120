use alloc::string::String;
use alloc::vec::Vec;

use crate::mdp::Violation;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid MDP: {} violation(s), first: {}", .0.len(), .0[0])]
    InvalidMdp(Vec<Violation>),
    #[error("malformed MDP: {0}")]
    Shape(String),
    #[error("index out of range: {what} {index} (limit {limit})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("policy count {count} exceeds the enumeration cap {cap}")]
    CapExceeded { count: u128, cap: u128 },
    #[error("multichain structure: policy {witness:?} induces {classes} closed recurrent classes")]
    Multichain { witness: Vec<usize>, classes: usize },
    #[error("solver did not converge within {iterations} iterations (residual {residual:e})")]
    IterationLimit { iterations: usize, residual: f64 },
    #[error("singular linear system")]
    Singular,
    #[error("LP did not reach an optimum: {0}")]
    Lp(String),
    #[error("no positive occupancy at state {state}")]
    DegenerateDual { state: usize },
    #[error("criterion mismatch: expected {expected}, got {got}")]
    CriterionMismatch {
        expected: &'static str,
        got: &'static str,
    },
    #[error("empty input: {0}")]
    Empty(&'static str),
}
