//! CSV tables for sweeps and learning traces.
//!
//! Sweep layout: a header `gamma,<state names...>` followed by one row per
//! grid point, every number printed with 12 significant digits.

use deprec_core::qlearning::TracePoint;

pub const SWEEP_DIGITS: usize = 12;

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("a table needs at least one row")]
    Empty,
    #[error("row {row} has {found} values, expected {expected}")]
    Width { row: usize, expected: usize, found: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Formats `x` rounded to `digits` significant digits, without trailing
/// zeros. Magnitudes outside `[1e-5, 10^digits)` use exponent notation.
pub fn format_significant(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, TableError> {
    let bytes = w.into_inner().map_err(|e| TableError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Renders `(gamma, values)` rows under a `gamma,<state names>` header.
pub fn write_sweep_csv(state_names: &[String], rows: &[(f64, Vec<f64>)]) -> Result<String, TableError> {
    if rows.is_empty() {
        return Err(TableError::Empty);
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = vec!["gamma".to_string()];
    header.extend(state_names.iter().cloned());
    w.write_record(&header)?;
    for (i, (gamma, values)) in rows.iter().enumerate() {
        if values.len() != state_names.len() {
            return Err(TableError::Width {
                row: i,
                expected: state_names.len(),
                found: values.len(),
            });
        }
        let mut record = vec![format_significant(*gamma, SWEEP_DIGITS)];
        record.extend(values.iter().map(|&v| format_significant(v, SWEEP_DIGITS)));
        w.write_record(&record)?;
    }
    finish(w)
}

/// Learning trace: `step,sup_gap,epsilon,alpha_example`; the gap column is empty
/// when the run had no reference table.
pub fn write_trace_csv(trace: &[TracePoint], digits: usize) -> Result<String, TableError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["step", "sup_gap", "epsilon", "alpha_example"])?;
    for p in trace {
        w.write_record([
            p.step.to_string(),
            p.sup_gap.map_or(String::new(), |g| format_significant(g, digits)),
            format_significant(p.epsilon, digits),
            format_significant(p.alpha, digits),
        ])?;
    }
    finish(w)
}
