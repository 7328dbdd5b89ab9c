use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context};

use spam_core::solvers::{RunOutcome, RunStatus};

/// One row of a method comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub method: String,
    /// Final search space dimension.
    pub iterations: usize,
    pub converged: bool,
    pub a_matvecs: u64,
    pub inner_matvecs: u64,
    pub final_value: f64,
    pub final_error: Option<f64>,
}

impl RunSummary {
    pub fn from_outcome(method: &str, outcome: &RunOutcome) -> Self {
        let last = outcome.records.last().expect("a run has at least one record");
        Self {
            method: method.to_string(),
            iterations: last.k,
            converged: outcome.status == RunStatus::Converged,
            a_matvecs: last.a_matvecs,
            inner_matvecs: last.inner_matvecs,
            final_value: last.ritz_value,
            final_error: last.abs_error,
        }
    }
}

/// Read back a per-run CSV written by `run`.
pub fn parse_csv(path: &Path) -> anyhow::Result<RunSummary> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut method = None;
    let mut status = None;
    let mut last = None;
    let mut seen_columns = false;
    for line in text.lines() {
        if let Some(meta) = line.strip_prefix("# ") {
            if let Some(m) = meta.strip_prefix("method: ") {
                method = Some(m.to_string());
            } else if let Some(s) = meta.strip_prefix("status: ") {
                status = Some(s.to_string());
            }
            continue;
        }
        if line == crate::CSV_COLUMNS {
            seen_columns = true;
            continue;
        }
        if !seen_columns || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            bail!("{}: malformed row `{line}`", path.display());
        }
        last = Some(fields.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    }
    let method = method.ok_or_else(|| anyhow!("{}: missing `# method:` header", path.display()))?;
    let status = status.ok_or_else(|| anyhow!("{}: missing `# status:` header", path.display()))?;
    let row = last.ok_or_else(|| anyhow!("{}: no data rows", path.display()))?;
    let parse_f = |s: &str| -> anyhow::Result<f64> { s.parse().with_context(|| format!("bad number `{s}`")) };
    let error = parse_f(&row[2])?;
    Ok(RunSummary {
        method,
        iterations: row[0].parse()?,
        converged: status == "converged",
        a_matvecs: row[4].parse()?,
        inner_matvecs: row[5].parse()?,
        final_value: parse_f(&row[1])?,
        final_error: (!error.is_nan()).then_some(error),
    })
}

/// Aligned text table; a `*` after the iteration count marks runs that did not
/// reach the tolerance.
pub fn compare_table(rows: &[RunSummary]) -> String {
    let header = ["method", "iterations", "a_matvecs", "inner_matvecs", "ritz_value", "abs_error"];
    let body: Vec<[String; 6]> = rows
        .iter()
        .map(|r| {
            [
                r.method.clone(),
                format!("{}{}", r.iterations, if r.converged { "" } else { "*" }),
                r.a_matvecs.to_string(),
                r.inner_matvecs.to_string(),
                format!("{:.12e}", r.final_value),
                r.final_error.map_or_else(|| "-".to_string(), |e| format!("{e:.3e}")),
            ]
        })
        .collect();
    let mut width = header.map(str::len);
    for row in &body {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[&str]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&width)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    line(&header);
    for row in &body {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        line(&cells);
    }
    out
}

pub fn write_comparison_csv(path: &Path, rows: &[RunSummary]) -> anyhow::Result<()> {
    let mut text = String::from("method,iterations,converged,a_matvecs,inner_matvecs,ritz_value,abs_error\n");
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{:.16e},{}\n",
            r.method,
            r.iterations,
            r.converged,
            r.a_matvecs,
            r.inner_matvecs,
            r.final_value,
            r.final_error.map_or_else(|| "nan".to_string(), |e| format!("{e:.16e}"))
        ));
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
