//! Report emission.
//!
//! CSV is the default output; JSON carries the same reports as nested
//! documents. CSV floats are written with 17 significant digits so parsed
//! values round-trip bit-exactly, and all emission is deterministic: the
//! same report always renders to identical bytes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::{DesignReport, ExperimentReport, OracleReport, RankReport};

/// 17 significant digits, enough to reconstruct any f64 exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON document with a trailing newline.
pub fn to_json<T: Serialize>(report: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Config(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    Ok(text)
}

impl RankReport {
    /// Long-format `key,value` table: the verdict fields followed by the
    /// singular spectrum as `sigma_1..sigma_k`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        out.push_str(&format!("holds,{}\n", self.holds));
        out.push_str(&format!("numerical_rank,{}\n", self.numerical_rank));
        out.push_str(&format!("full_rank,{}\n", self.full_rank));
        out.push_str(&format!("rel_tol,{}\n", format_float(self.rel_tol)));
        out.push_str(&format!("rows,{}\n", self.rows));
        out.push_str(&format!("cols,{}\n", self.cols));
        if let Some(note) = &self.note {
            out.push_str(&format!("note,\"{note}\"\n"));
        }
        for (k, sigma) in self.singular_values.iter().enumerate() {
            out.push_str(&format!("sigma_{},{}\n", k + 1, format_float(*sigma)));
        }
        out
    }
}

impl DesignReport {
    /// The designed sequence as a table with header `u_1..u_m`, one row per
    /// input.
    pub fn to_csv(&self) -> String {
        let m = self.input.first().map_or(0, Vec::len);
        let header: Vec<String> = (1..=m).map(|k| format!("u_{k}")).collect();
        let mut out = header.join(",");
        out.push('\n');
        for row in &self.input {
            let cells: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

impl ExperimentReport {
    /// One row per verified neighbor:
    /// `index,delta_max,l1_error,rank_ok,w1_1..w1_m`, where `w1_k` is the
    /// k-th coordinate of the neighbor's first-node weight vector. A leading
    /// row with index -1 carries the base state's first-node weights as the
    /// reference marker for the scatter panel.
    pub fn to_csv(&self) -> String {
        let m = self.reference_first_column.len();
        let mut header = String::from("index,delta_max,l1_error,rank_ok");
        for k in 1..=m {
            header.push_str(&format!(",w1_{k}"));
        }
        header.push('\n');
        let mut out = header;

        let mut reference = format!("-1,{},{},true", format_float(0.0), format_float(0.0));
        for v in &self.reference_first_column {
            reference.push_str(&format!(",{}", format_float(*v)));
        }
        reference.push('\n');
        out.push_str(&reference);

        for record in &self.neighbors {
            let mut row = format!(
                "{},{},{},{}",
                record.index,
                format_float(record.delta_max),
                format_float(record.l1_error),
                record.rank_ok
            );
            for v in &record.first_column {
                row.push_str(&format!(",{}", format_float(*v)));
            }
            row.push('\n');
            out.push_str(&row);
        }
        out
    }
}

impl OracleReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        for (i, w) in self.weights.iter().enumerate() {
            out.push_str(&format!("weight_{},{}\n", i + 1, format_float(*w)));
        }
        for (i, w) in self.witness.iter().enumerate() {
            out.push_str(&format!("witness_{},{}\n", i + 1, format_float(*w)));
        }
        out.push_str(&format!("identical,{}\n", self.identical));
        out.push_str(&format!("max_abs_diff,{}\n", format_float(self.max_abs_diff)));
        out.push_str(&format!("conclusive,{}\n", self.conclusive));
        out.push_str(&format!("grid_lo,{}\n", format_float(self.grid_lo)));
        out.push_str(&format!("grid_hi,{}\n", format_float(self.grid_hi)));
        out.push_str(&format!("grid_points,{}\n", self.grid_points));
        out
    }
}
