//! CSV tables. Indices (`index`, `block_index`) are 1-based; floats use the
//! shortest round-trip representation.

use std::path::Path;

use discerr_core::ode::{BlockStats, State};
use discerr_core::quantify::{AxisPair, CoverageReport, ErrorEllipse};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub index: usize,
    pub t: f64,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRow {
    pub block_index: usize,
    pub k: usize,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipseRow {
    pub block_index: usize,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub pair: String,
    pub level: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
    pub angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub pair: String,
    pub level: f64,
    pub fraction: f64,
    pub n_counted: usize,
    pub n_excluded: usize,
}

/// `a-b`, 1-based. A dash keeps the cell unquoted.
pub fn pair_label(pair: AxisPair) -> String {
    format!("{}-{}", pair.0 + 1, pair.1 + 1)
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Input(format!("csv: {e}")))?;
    }
    w.into_inner().map_err(|e| CliError::Input(format!("csv: {e}")))
}

/// Header-only output for empty tables, so column names are always present.
pub fn to_csv_with_header<T: Serialize>(rows: &[T], header: &[&str]) -> Result<Vec<u8>, CliError> {
    if rows.is_empty() {
        let mut s = header.join(",");
        s.push('\n');
        return Ok(s.into_bytes());
    }
    to_csv(rows)
}

pub fn series_rows(times: &[f64], values: &[State]) -> Vec<SeriesRow> {
    times
        .iter()
        .zip(values)
        .enumerate()
        .map(|(i, (&t, v))| SeriesRow { index: i + 1, t, v1: v[0], v2: v[1], v3: v[2] })
        .collect()
}

pub fn block_rows(stats: &BlockStats) -> Vec<BlockRow> {
    stats
        .sizes
        .iter()
        .zip(&stats.spans)
        .enumerate()
        .map(|(b, (&k, &(t_start, t_end)))| BlockRow { block_index: b + 1, k, t_start, t_end })
        .collect()
}

pub fn ellipse_row(e: &ErrorEllipse, span: Option<(f64, f64)>) -> EllipseRow {
    EllipseRow {
        block_index: e.block_index + 1,
        t_start: span.map(|s| s.0),
        t_end: span.map(|s| s.1),
        pair: pair_label(e.pair),
        level: e.level,
        semi_major: e.semi_major,
        semi_minor: e.semi_minor,
        angle_deg: e.angle.to_degrees(),
    }
}

pub fn coverage_rows(report: &CoverageReport) -> Vec<CoverageRow> {
    report
        .entries
        .iter()
        .map(|c| CoverageRow {
            pair: pair_label(c.pair),
            level: c.level,
            fraction: c.fraction,
            n_counted: c.n_counted,
            n_excluded: c.n_excluded(),
        })
        .collect()
}

/// Reads a headed CSV, reporting the failing line on error.
pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    if let csv::ErrorKind::Io(_) = e.kind() {
        return CliError::Input(format!("{}: {e}", path.display()));
    }
    match e.position() {
        Some(pos) => CliError::Input(format!("{}: line {}: {e}", path.display(), pos.line())),
        None => CliError::Input(format!("{}: {e}", path.display())),
    }
}

/// Series values in file order; `index` must run 1, 2, ….
pub fn series_values(path: &Path, rows: &[SeriesRow]) -> Result<Vec<State>, CliError> {
    for (i, r) in rows.iter().enumerate() {
        if r.index != i + 1 {
            return Err(CliError::Input(format!(
                "{}: row {}: index {} out of sequence (expected {})",
                path.display(),
                i + 1,
                r.index,
                i + 1
            )));
        }
    }
    Ok(rows.iter().map(|r| [r.v1, r.v2, r.v3]).collect())
}

/// Cumulative block ends from the `k` column; `block_index` must run 1, 2, ….
pub fn block_boundaries(path: &Path, rows: &[BlockRow]) -> Result<Vec<usize>, CliError> {
    let mut end = 0;
    let mut out = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if r.block_index != i + 1 {
            return Err(CliError::Input(format!(
                "{}: row {}: block_index {} out of sequence (expected {})",
                path.display(),
                i + 1,
                r.block_index,
                i + 1
            )));
        }
        if r.k == 0 {
            return Err(CliError::Input(format!("{}: row {}: k must be at least 1", path.display(), i + 1)));
        }
        end += r.k;
        out.push(end);
    }
    Ok(out)
}

/// `"1,2;2,3"` → 0-based pairs.
pub fn parse_pairs(list: &str) -> Result<Vec<AxisPair>, CliError> {
    let mut out = Vec::new();
    for part in list.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let nums: Vec<&str> = part.split(',').map(str::trim).collect();
        let bad = || CliError::Input(format!("--pairs: `{part}` is not of the form a,b with distinct axes counted from 1"));
        if nums.len() != 2 {
            return Err(bad());
        }
        let a: usize = nums[0].parse().map_err(|_| bad())?;
        let b: usize = nums[1].parse().map_err(|_| bad())?;
        if a == 0 || b == 0 || a == b {
            return Err(bad());
        }
        out.push(AxisPair(a - 1, b - 1));
    }
    if out.is_empty() {
        return Err(CliError::Input("--pairs: no pairs given".into()));
    }
    Ok(out)
}

/// `"0.68,0.95"` → levels in `(0, 1)`.
pub fn parse_levels(list: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for part in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let v: f64 = part
            .parse()
            .map_err(|_| CliError::Input(format!("--levels: `{part}` is not a number")))?;
        if !(v > 0.0 && v < 1.0) {
            return Err(CliError::Input(format!("--levels: {v} is not in (0, 1)")));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(CliError::Input("--levels: no levels given".into()));
    }
    Ok(out)
}
