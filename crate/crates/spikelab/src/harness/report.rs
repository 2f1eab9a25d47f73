//! Result rows, CSV output and the markdown summary.
//!
//! `results.csv` is fully determined by (config, seed): floats are written
//! with Rust's shortest-roundtrip formatting and rows are sorted before
//! writing. Wall-clock timings stay in memory (and on the console) so the
//! CSV bytes stay reproducible.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    Error(String),
}

/// One record per (solver, grid point, replicate).
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub experiment: String,
    pub solver: String,
    pub sweep: String,
    pub sweep_value: f64,
    pub replicate: usize,
    pub seed: u64,
    pub sin_theta_f: f64,
    pub excess_risk: f64,
    pub stderr: f64,
    /// Measured fit time; kept out of the CSV so output bytes are
    /// reproducible across runs.
    pub wall_time_ms: f64,
    pub status: RowStatus,
}

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.status == RowStatus::Ok
    }
}

pub const CSV_HEADER: &str =
    "experiment,solver,sweep,sweep_value,replicate,seed,sin_theta_f,excess_risk,stderr,status";

/// Renders rows as CSV text: UTF-8, comma-separated, '.'-decimal, header
/// row, no quoting (field contents are sanitized by construction).
pub fn csv_string(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        match &row.status {
            RowStatus::Ok => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},ok",
                    row.experiment,
                    row.solver,
                    row.sweep,
                    row.sweep_value,
                    row.replicate,
                    row.seed,
                    row.sin_theta_f,
                    row.excess_risk,
                    row.stderr,
                );
            }
            RowStatus::Error(msg) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},,,,error: {}",
                    row.experiment,
                    row.solver,
                    row.sweep,
                    row.sweep_value,
                    row.replicate,
                    row.seed,
                    sanitize(msg),
                );
            }
        }
    }
    out
}

fn sanitize(msg: &str) -> String {
    msg.replace([',', '\n', '\r'], ";")
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(csv_string(rows).as_bytes())?;
    Ok(())
}

/// Mean and standard error of one metric per (solver, sweep value) cell,
/// computed over successful replicates only.
pub fn aggregate(
    rows: &[ResultRow],
    metric: impl Fn(&ResultRow) -> f64,
) -> Vec<(String, f64, f64, f64, usize)> {
    // (solver, sweep_value, mean, stderr, count), solver-major, ascending value.
    let mut cells: Vec<(String, f64, Vec<f64>)> = Vec::new();
    for row in rows.iter().filter(|r| r.is_ok()) {
        let v = metric(row);
        match cells
            .iter_mut()
            .find(|(s, sv, _)| *s == row.solver && *sv == row.sweep_value)
        {
            Some((_, _, acc)) => acc.push(v),
            None => cells.push((row.solver.clone(), row.sweep_value, vec![v])),
        }
    }
    cells.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    cells
        .into_iter()
        .map(|(solver, value, vals)| {
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = if vals.len() > 1 {
                vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            (solver, value, mean, (var / n).sqrt(), vals.len())
        })
        .collect()
}

/// Markdown summary with one table per metric, solvers as rows and sweep
/// values as columns; cells are `mean ± stderr` at full roundtrip precision
/// so they can be checked against the CSV exactly.
pub fn summary_string(experiment: &str, sweep: &str, rows: &[ResultRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {experiment} summary\n");
    let n_err = rows.iter().filter(|r| !r.is_ok()).count();
    let reps = rows
        .iter()
        .map(|r| r.replicate)
        .max()
        .map(|m| m + 1)
        .unwrap_or(0);
    let _ = writeln!(out, "{} rows, {} replicates per cell, {} error rows.\n", rows.len(), reps, n_err);
    for (title, metric) in [
        ("Downstream excess risk", &(|r: &ResultRow| r.excess_risk) as &dyn Fn(&ResultRow) -> f64),
        ("Feature recovery sin-Θ_F", &|r: &ResultRow| r.sin_theta_f),
    ] {
        let cells = aggregate(rows, metric);
        if cells.is_empty() {
            continue;
        }
        let mut values: Vec<f64> = cells.iter().map(|c| c.1).collect();
        values.sort_by(|a, b| a.total_cmp(b));
        values.dedup();
        let mut solvers: Vec<String> = cells.iter().map(|c| c.0.clone()).collect();
        solvers.dedup();

        let _ = writeln!(out, "## {title} (mean ± stderr)\n");
        let header: Vec<String> = values.iter().map(|v| format!("{sweep}={v}")).collect();
        let _ = writeln!(out, "| solver | {} |", header.join(" | "));
        let _ = writeln!(out, "|{}|", vec!["---"; values.len() + 1].join("|"));
        for solver in &solvers {
            let mut line = format!("| {solver} |");
            for v in &values {
                match cells.iter().find(|c| c.0 == *solver && c.1 == *v) {
                    Some((_, _, mean, stderr, _)) => {
                        let _ = write!(line, " {mean} ± {stderr} |");
                    }
                    None => line.push_str(" — |"),
                }
            }
            let _ = writeln!(out, "{line}");
        }
        out.push('\n');
    }
    out
}

pub fn write_summary(experiment: &str, sweep: &str, rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(summary_string(experiment, sweep, rows).as_bytes())?;
    Ok(())
}
