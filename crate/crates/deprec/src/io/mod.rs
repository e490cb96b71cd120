//! Text formats: MDP documents, sweep tables, LP listings and SVG charts.

pub mod document;
pub mod lp_text;
pub mod svg;
pub mod table;

pub use document::{parse_document, parse_mdp, serialize_document, serialize_mdp, Diagnostic, DiagnosticKind, MdpDocument};
pub use table::{format_significant, write_sweep_csv, TableError};
