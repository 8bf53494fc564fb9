//! CSV and JSON emission with lossless round-trips.
//!
//! JSON serialization is plain serde. The CSV schemas are fixed,
//! long-format tables (documented column orders below); floats are printed
//! with Rust's shortest round-trip formatting, so re-loading reproduces the
//! exact bit patterns.

use crate::conditions::ConditionReport;
use crate::error::{Error, Result};
use crate::evt_process::WkPath;
use crate::montecarlo::{GridPoint, RunResult};
use std::path::Path;

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::Parse(format!("bad float {field:?} on line {line}")))
}

fn parse_opt(field: &str, line: usize) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_f64(field, line).map(Some)
    }
}

fn parse_u64(field: &str, line: usize) -> Result<u64> {
    field
        .parse()
        .map_err(|_| Error::Parse(format!("bad index {field:?} on line {line}")))
}

fn rows(csv: &str, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut lines = csv.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == header => {}
        other => {
            return Err(Error::Parse(format!(
                "expected header {header:?}, got {:?}",
                other.map(|(_, h)| h)
            )))
        }
    }
    Ok(lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| (i + 1, l.split(',').map(str::to_string).collect()))
        .collect())
}

/// Column order: `index,mean,std_error,q05,median,q95,target,deviation_se`.
pub const RUN_RESULT_HEADER: &str = "index,mean,std_error,q05,median,q95,target,deviation_se";

pub fn run_result_to_csv(result: &RunResult) -> String {
    let mut out = String::from(RUN_RESULT_HEADER);
    out.push('\n');
    for p in &result.points {
        out.push_str(&format!(
            "{},{:?},{:?},{:?},{:?},{:?},{},{}\n",
            p.index,
            p.mean,
            p.std_error,
            p.q05,
            p.median,
            p.q95,
            opt(p.target),
            opt(p.deviation_se)
        ));
    }
    out
}

pub fn grid_points_from_csv(csv: &str) -> Result<Vec<GridPoint>> {
    rows(csv, RUN_RESULT_HEADER)?
        .into_iter()
        .map(|(ln, f)| {
            if f.len() != 8 {
                return Err(Error::Parse(format!("expected 8 fields on line {ln}")));
            }
            Ok(GridPoint {
                index: parse_u64(&f[0], ln)?,
                mean: parse_f64(&f[1], ln)?,
                std_error: parse_f64(&f[2], ln)?,
                q05: parse_f64(&f[3], ln)?,
                median: parse_f64(&f[4], ln)?,
                q95: parse_f64(&f[5], ln)?,
                target: parse_opt(&f[6], ln)?,
                deviation_se: parse_opt(&f[7], ln)?,
            })
        })
        .collect()
}

/// Column order: `index,value` (the report grid only; the verdict and fit
/// live in the JSON form).
pub const REPORT_HEADER: &str = "index,value";

pub fn report_to_csv(report: &ConditionReport) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for &(q, v) in &report.grid {
        out.push_str(&format!("{q},{v:?}\n"));
    }
    out
}

pub fn report_grid_from_csv(csv: &str) -> Result<Vec<(u64, f64)>> {
    rows(csv, REPORT_HEADER)?
        .into_iter()
        .map(|(ln, f)| {
            if f.len() != 2 {
                return Err(Error::Parse(format!("expected 2 fields on line {ln}")));
            }
            Ok((parse_u64(&f[0], ln)?, parse_f64(&f[1], ln)?))
        })
        .collect()
}

/// Column order: `k,normalized,raw_w`.
pub const WK_PATH_HEADER: &str = "k,normalized,raw_w";

pub fn wk_path_to_csv(path: &WkPath) -> String {
    let mut out = String::from(WK_PATH_HEADER);
    out.push('\n');
    for (i, (&v, &w)) in path.values.iter().zip(&path.raw_w).enumerate() {
        out.push_str(&format!("{},{v:?},{w:?}\n", i + 1));
    }
    out
}

pub fn wk_path_rows_from_csv(csv: &str) -> Result<Vec<(u64, f64, f64)>> {
    rows(csv, WK_PATH_HEADER)?
        .into_iter()
        .map(|(ln, f)| {
            if f.len() != 3 {
                return Err(Error::Parse(format!("expected 3 fields on line {ln}")));
            }
            Ok((
                parse_u64(&f[0], ln)?,
                parse_f64(&f[1], ln)?,
                parse_f64(&f[2], ln)?,
            ))
        })
        .collect()
}

/// Writes through a temporary file in the target directory and renames on
/// success, so a failed run never leaves a partial artifact behind.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::Io(e)
    })
}
