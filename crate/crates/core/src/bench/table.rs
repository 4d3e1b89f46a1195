//! Aggregated result table and its CSV/JSON encodings.
//!
//! Floats are written with 12 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Exclusion;
use crate::{Error, Result};

pub const HEADER: &str = "codec,n,weights,t,err_mean,err_std,var_mean,clip_mean";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub codec: String,
    pub n: u32,
    pub weights: String,
    pub t: usize,
    pub err_mean: f64,
    pub err_std: f64,
    pub var_mean: f64,
    pub clip_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    /// One row per (codec, n, weights, t).
    pub rows: Vec<TableRow>,
    /// `(trial, graph seed)` for every trial, in trial order.
    pub trial_seeds: Vec<(usize, u64)>,
    /// Disconnected graph draws rejected across all trials.
    pub rejections: u32,
    pub exclusions: Vec<Exclusion>,
}

impl ResultTable {
    /// Rows of one combination, ordered by `t`.
    pub fn series<'a>(&'a self, codec: &'a str, n: u32, weights: &'a str) -> impl Iterator<Item = &'a TableRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.codec == codec && r.n == n && r.weights == weights)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

fn round12(x: f64) -> f64 {
    if x.is_finite() {
        sig12(x).parse().unwrap_or(x)
    } else {
        x
    }
}

pub fn to_csv(rows: &[TableRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.codec,
            r.n,
            r.weights,
            r.t,
            sig12(r.err_mean),
            sig12(r.err_std),
            sig12(r.var_mean),
            sig12(r.clip_mean)
        );
    }
    out
}

pub fn to_json(rows: &[TableRow]) -> Result<String> {
    let rounded: Vec<TableRow> = rows
        .iter()
        .map(|r| TableRow {
            err_mean: round12(r.err_mean),
            err_std: round12(r.err_std),
            var_mean: round12(r.var_mean),
            clip_mean: round12(r.clip_mean),
            ..r.clone()
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&rounded)?;
    s.push('\n');
    Ok(s)
}

pub fn write_table(table: &ResultTable, path: &Path, format: TableFormat) -> Result<()> {
    let text = match format {
        TableFormat::Csv => to_csv(&table.rows),
        TableFormat::Json => to_json(&table.rows)?,
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn bad(detail: String) -> Error {
    Error::Format {
        what: "result table",
        detail,
    }
}

pub fn parse_table_csv(text: &str) -> Result<Vec<TableRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == HEADER => {}
        other => return Err(bad(format!("unexpected header {other:?}"))),
    }
    let num = |field: &str, line: usize| -> Result<f64> {
        field
            .parse()
            .map_err(|_| bad(format!("line {line}: bad number `{field}`")))
    };
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let line_no = k + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(bad(format!("line {line_no}: {} fields", f.len())));
        }
        rows.push(TableRow {
            codec: f[0].to_string(),
            n: f[1].parse().map_err(|_| bad(format!("line {line_no}: bad n")))?,
            weights: f[2].to_string(),
            t: f[3].parse().map_err(|_| bad(format!("line {line_no}: bad t")))?,
            err_mean: num(f[4], line_no)?,
            err_std: num(f[5], line_no)?,
            var_mean: num(f[6], line_no)?,
            clip_mean: num(f[7], line_no)?,
        });
    }
    Ok(rows)
}

pub fn parse_table_json(text: &str) -> Result<Vec<TableRow>> {
    Ok(serde_json::from_str(text)?)
}
