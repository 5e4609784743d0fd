//! CSV emission.
//!
//! Header `round,wall_units,err_alpha,err_l2,loss,lemma3_lhs,lemma3_rhs,bound_value`,
//! one row per recorded round. Numbers use Rust's shortest round-trip decimal
//! formatting; non-applicable fields are empty.

use std::fmt::Write as _;
use std::path::Path;

use super::experiment::RunSummary;
use crate::error::Result;

pub const CSV_HEADER: &str = "round,wall_units,err_alpha,err_l2,loss,lemma3_lhs,lemma3_rhs,bound_value";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn format_csv(summary: &RunSummary) -> String {
    let mut out = String::with_capacity(64 * (summary.records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &summary.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.round,
            r.wall_units,
            r.err_alpha,
            r.err_l2,
            r.loss,
            opt(r.lemma3_lhs),
            opt(r.lemma3_rhs),
            opt(r.bound_value)
        );
    }
    out
}

pub fn emit_csv(summary: &RunSummary, path: &Path) -> Result<()> {
    std::fs::write(path, format_csv(summary))?;
    Ok(())
}
