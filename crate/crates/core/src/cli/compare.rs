//! Joins result tables that share a schema and derives differences against
//! the first file.

use std::collections::BTreeMap;
use std::path::Path;

use crate::entropy::{scaling_exponent_fit, HEntry};
use crate::stats::Z95;

use super::output::{num, Table};
use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    /// `n,epsilon,H_lower,H_upper,method,seed`
    HTable,
    /// `n,c_n,ci_low,ci_high`
    Standardness,
    /// `n,epsilon,hits,samples,p,ci_low,ci_high`
    Ball,
}

impl Schema {
    fn detect(columns: &[String]) -> Option<Self> {
        let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
        match cols.as_slice() {
            ["n", "epsilon", "H_lower", "H_upper", "method", "seed"] => Some(Schema::HTable),
            ["n", "c_n", "ci_low", "ci_high"] => Some(Schema::Standardness),
            ["n", "epsilon", "hits", "samples", "p", "ci_low", "ci_high"] => Some(Schema::Ball),
            _ => None,
        }
    }
}

struct Loaded {
    name: String,
    columns: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

fn usage(message: String) -> CliError {
    CliError::Usage(message)
}

fn load(path: &Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let columns: Vec<String> = r
        .headers()
        .map_err(|e| usage(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = r
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if columns.iter().all(|c| c.is_empty()) || rows.is_empty() {
        return Err(usage(format!("{}: empty table", path.display())));
    }
    Ok(Loaded {
        name: path
            .file_name()
            .map_or_else(|| path.display().to_string(), |f| f.to_string_lossy().into_owned()),
        columns,
        rows,
    })
}

fn field(row: &csv::StringRecord, i: usize, file: &str) -> Result<f64, CliError> {
    let v = row.get(i).unwrap_or("");
    if v.is_empty() {
        return Ok(f64::NAN);
    }
    v.parse()
        .map_err(|_| usage(format!("{file}: cannot parse {v:?} as a number")))
}

/// Builds the comparison table for `paths`.
pub fn compare(paths: &[impl AsRef<Path>]) -> Result<Table, CliError> {
    if paths.is_empty() {
        return Err(usage("compare needs at least one file".into()));
    }
    let files = paths
        .iter()
        .map(|p| load(p.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let schema = Schema::detect(&files[0].columns)
        .ok_or_else(|| usage(format!("{}: unrecognized columns {:?}", files[0].name, files[0].columns)))?;
    for f in &files[1..] {
        if f.columns != files[0].columns {
            return Err(usage(format!(
                "schema mismatch: {} has {:?}, {} has {:?}",
                files[0].name, files[0].columns, f.name, f.columns
            )));
        }
    }
    match schema {
        Schema::HTable => compare_fits(&files),
        Schema::Standardness => compare_series(&files, 1, 2, 3),
        Schema::Ball => compare_series(&files, 4, 5, 6),
    }
}

fn compare_fits(files: &[Loaded]) -> Result<Table, CliError> {
    let mut t = Table::new(&[
        "file",
        "beta",
        "stderr",
        "r_squared",
        "points",
        "diff_vs_first",
        "diff_stderr",
    ]);
    let mut first: Option<(f64, f64)> = None;
    for (k, f) in files.iter().enumerate() {
        let table = f
            .rows
            .iter()
            .map(|r| {
                Ok(HEntry {
                    n: field(r, 0, &f.name)? as usize,
                    epsilon: field(r, 1, &f.name)?,
                    lower: field(r, 2, &f.name)?,
                    upper: field(r, 3, &f.name)?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let fit = scaling_exponent_fit(&table).map_err(|e| usage(format!("{}: {e}", f.name)))?;
        let (b0, s0) = *first.get_or_insert((fit.beta, fit.stderr));
        t.push(vec![
            f.name.clone(),
            num(fit.beta),
            num(fit.stderr),
            num(fit.r_squared),
            fit.points.to_string(),
            num(fit.beta - b0),
            if k == 0 {
                num(0.0)
            } else {
                num((fit.stderr.powi(2) + s0.powi(2)).sqrt())
            },
        ]);
    }
    Ok(t)
}

/// Joins on `n`. Differences use the interval half-widths as 95% normal
/// errors.
fn compare_series(files: &[Loaded], value: usize, lo: usize, hi: usize) -> Result<Table, CliError> {
    let mut by_n: BTreeMap<i64, Vec<Option<(f64, f64)>>> = BTreeMap::new();
    for (k, f) in files.iter().enumerate() {
        for r in &f.rows {
            let n = field(r, 0, &f.name)? as i64;
            let v = field(r, value, &f.name)?;
            let se = (field(r, hi, &f.name)? - field(r, lo, &f.name)?) / (2.0 * Z95);
            by_n.entry(n).or_insert_with(|| vec![None; files.len()])[k] = Some((v, se));
        }
    }
    let mut cols = vec!["n".to_string()];
    for f in files {
        cols.push(f.name.clone());
    }
    for f in &files[1..] {
        cols.push(format!("diff_{}", f.name));
        cols.push(format!("diff_stderr_{}", f.name));
    }
    let mut t = Table {
        columns: cols,
        rows: Vec::new(),
    };
    for (n, vals) in by_n {
        let mut row = vec![n.to_string()];
        row.extend(vals.iter().map(|v| v.map_or(String::new(), |(x, _)| num(x))));
        for v in &vals[1..] {
            match (vals[0], v) {
                (Some((x0, s0)), Some((x, s))) => {
                    row.push(num(x - x0));
                    row.push(num((s * s + s0 * s0).sqrt()));
                }
                _ => {
                    row.push(String::new());
                    row.push(String::new());
                }
            }
        }
        t.rows.push(row);
    }
    Ok(t)
}
