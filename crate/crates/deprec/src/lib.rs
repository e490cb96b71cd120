//! Document formats, reports and the command-line front end for
//! [`deprec_core`].

pub mod cli;
pub mod io;
