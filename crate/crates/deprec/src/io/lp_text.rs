//! Plain-text listing of an [`LpInstance`].
//!
//! ```text
//! lp deprec-lp/1
//! minimize
//! vars v_s_d v_s_1
//! objective 1 1
//! bounds free free
//! c_s_d_a_1 1 -0.5 >= 0
//! ```
//!
//! Coefficients are dense, one per variable, in the order of `vars`. A bound
//! is a number (lower bound) or `free`.

use std::fmt::Write as _;

use deprec_core::lp::{LpInstance, Relation, Sense};
use deprec_core::Mdp;

pub const LP_FORMAT_VERSION: &str = "deprec-lp/1";

/// Variable names `v_<state>` for the value LP.
pub fn primal_names(mdp: &Mdp) -> (Vec<String>, Vec<String>) {
    let vars = mdp.state_names().iter().map(|s| format!("v_{s}")).collect();
    (vars, pair_names(mdp, "c"))
}

/// Variable names `y_<state>_<action>` and balance rows `b_<state>` for the
/// occupancy LP.
pub fn dual_names(mdp: &Mdp) -> (Vec<String>, Vec<String>) {
    let rows = mdp.state_names().iter().map(|s| format!("b_{s}")).collect();
    (pair_names(mdp, "y"), rows)
}

fn pair_names(mdp: &Mdp, prefix: &str) -> Vec<String> {
    (0..mdp.n_states())
        .flat_map(|s| {
            mdp.action_names(s)
                .iter()
                .map(move |a| format!("{prefix}_{}_{a}", mdp.state_name(s)))
        })
        .collect()
}

// folds -0 into 0
fn num(x: f64) -> f64 {
    x + 0.0
}

/// Writes `lp` with the given variable and row names. Missing names fall
/// back to `x<j>` and `r<i>`.
pub fn write_lp(lp: &LpInstance, vars: &[String], rows: &[String]) -> String {
    let mut out = String::new();
    writeln!(out, "lp {LP_FORMAT_VERSION}").unwrap();
    out.push_str(match lp.sense {
        Sense::Minimize => "minimize\n",
        Sense::Maximize => "maximize\n",
    });
    out.push_str("vars");
    for j in 0..lp.n_vars() {
        match vars.get(j) {
            Some(name) => write!(out, " {name}").unwrap(),
            None => write!(out, " x{j}").unwrap(),
        }
    }
    out.push_str("\nobjective");
    for c in &lp.objective {
        write!(out, " {}", num(*c)).unwrap();
    }
    out.push_str("\nbounds");
    for b in &lp.lower {
        match b {
            Some(l) => write!(out, " {}", num(*l)).unwrap(),
            None => out.push_str(" free"),
        }
    }
    out.push('\n');
    for i in 0..lp.n_constraints() {
        match rows.get(i) {
            Some(name) => out.push_str(name),
            None => write!(out, "r{i}").unwrap(),
        }
        for c in &lp.rows[i] {
            write!(out, " {}", num(*c)).unwrap();
        }
        let rel = match lp.relations[i] {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        };
        writeln!(out, " {rel} {}", num(lp.rhs[i])).unwrap();
    }
    out
}
