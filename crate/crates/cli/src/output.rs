//! `trace.csv` and `summary.json`.
//!
//! Floats are written in shortest round-trip form, so re-reading a trace
//! reproduces every iterate bit for bit and with it the run verdict.

use std::fs;
use std::path::{Path, PathBuf};

use emlab_core::diagnostics::{classify_run, Classification, ClassifyThresholds, RateFit};
use emlab_core::numerics::{Matrix, SymMatrix};
use emlab_core::proximal::{IterateTrace, Termination, TraceRecord};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";

const FIXED_COLUMNS: [&str; 8] = [
    "f",
    "psi_reg",
    "step_norm",
    "proj_step_norm",
    "residual",
    "lambda",
    "domain_margin",
    "run",
];

/// One iterate trace plus per-iterate extra columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub label: String,
    pub trace: IterateTrace,
    /// Named columns with one value per record.
    pub extras: Vec<(String, Vec<f64>)>,
}

impl RunTrace {
    pub fn new(label: impl Into<String>, trace: IterateTrace) -> Self {
        RunTrace {
            label: label.into(),
            trace,
            extras: Vec::new(),
        }
    }

    pub fn with_extra(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.trace.records.len());
        self.extras.push((name.into(), values));
        self
    }

    pub fn extra(&self, name: &str) -> Option<&[f64]> {
        self.extras
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFitSummary {
    pub kind: String,
    pub param: Option<f64>,
    pub r2: Option<f64>,
}

impl From<&RateFit> for RateFitSummary {
    fn from(f: &RateFit) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        RateFitSummary {
            kind: f.kind.label().to_string(),
            param: finite(f.kind.param()),
            r2: finite(f.r2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationSummary {
    pub final_step: f64,
    pub final_proj_step: f64,
    pub norm_growth: f64,
    pub closest_return: Option<f64>,
    pub winding: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub verdict: String,
    /// Set when no classification rule fired.
    pub ambiguous: bool,
    /// Trace run the verdict and fits refer to.
    pub primary_run: String,
    pub termination: String,
    pub iterations: usize,
    /// Projection used for partial convergence, row-major.
    pub projection: Option<Vec<Vec<f64>>>,
    pub rate_fit: Option<RateFitSummary>,
    pub kl_exponent: Option<f64>,
    pub final_point: Vec<f64>,
    pub constraint_residual: f64,
    pub wall_time_ms: f64,
    pub classification: ClassificationSummary,
    pub details: serde_json::Value,
}

pub fn projection_rows(p: &SymMatrix) -> Vec<Vec<f64>> {
    (0..p.dim())
        .map(|i| p.as_matrix().row(i).to_vec())
        .collect()
}

pub fn projection_from_rows(rows: &[Vec<f64>]) -> Result<SymMatrix> {
    let m = Matrix::from_rows(rows).map_err(|e| CliError::Trace(format!("projection: {e}")))?;
    SymMatrix::symmetrize(&m).map_err(|e| CliError::Trace(format!("projection: {e}")))
}

pub fn summarize_classification(c: &Classification) -> ClassificationSummary {
    ClassificationSummary {
        final_step: c.final_step,
        final_proj_step: c.final_proj_step,
        norm_growth: c.norm_growth,
        closest_return: c.closest_return,
        winding: c.winding,
    }
}

fn fmt_f64(v: f64) -> String {
    // `{}` never uses exponents, which gets unwieldy for tiny and huge values;
    // both forms print the shortest representation that parses back exactly.
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes all runs into one CSV; runs are told apart by the `run` column.
pub fn write_trace(path: &Path, runs: &[RunTrace]) -> Result<()> {
    let first = runs
        .first()
        .ok_or_else(|| CliError::Trace("no runs to write".into()))?;
    let dim = first.trace.records.first().map_or(0, |r| r.x.len());
    let extra_names: Vec<&str> = first.extras.iter().map(|(n, _)| n.as_str()).collect();
    for r in runs {
        let names: Vec<&str> = r.extras.iter().map(|(n, _)| n.as_str()).collect();
        if names != extra_names || r.trace.records.iter().any(|rec| rec.x.len() != dim) {
            return Err(CliError::Trace(
                "runs written together must share their columns".into(),
            ));
        }
        if r.label.is_empty() || r.label.contains(['\n', '\r']) {
            return Err(CliError::Trace(
                "run labels must be non-empty single-line strings".into(),
            ));
        }
    }
    let mut header = vec!["k".to_string()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    header.extend(FIXED_COLUMNS.iter().map(|s| s.to_string()));
    header.extend(extra_names.iter().map(|s| s.to_string()));
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&header)?;
    for run in runs {
        for (i, rec) in run.trace.records.iter().enumerate() {
            let mut row = vec![rec.k.to_string()];
            row.extend(rec.x.iter().map(|v| fmt_f64(*v)));
            for v in [
                rec.f,
                rec.psi_reg,
                rec.step_norm,
                rec.proj_step_norm,
                rec.residual,
                rec.lambda,
                rec.domain_margin,
            ] {
                row.push(fmt_f64(v));
            }
            row.push(run.label.clone());
            row.extend(run.extras.iter().map(|(_, col)| fmt_f64(col[i])));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Reads a trace written by [`write_trace`]. Terminations are not stored in
/// the CSV and read back as max-iterations; classification ignores them.
pub fn read_trace(path: &Path) -> Result<Vec<RunTrace>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Trace(format!("missing column `{name}`")))
    };
    let k_col = col("k")?;
    let x_cols: Vec<usize> = (0..)
        .map_while(|i| header.iter().position(|h| *h == format!("x{i}")))
        .collect();
    let fixed: Vec<usize> = FIXED_COLUMNS
        .iter()
        .map(|c| col(c))
        .collect::<Result<_>>()?;
    let run_col = fixed[7];
    let last_fixed = *fixed
        .iter()
        .chain(&x_cols)
        .chain([&k_col])
        .max()
        .expect("non-empty");
    let extra_cols: Vec<usize> = (last_fixed + 1..header.len()).collect();
    let mut runs: Vec<RunTrace> = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let num = |c: usize| -> Result<f64> {
            let s = record.get(c).unwrap_or("");
            s.parse::<f64>().map_err(|_| {
                CliError::Trace(format!(
                    "row {}: column `{}` is not a number: `{s}`",
                    line + 2,
                    header[c]
                ))
            })
        };
        let k: usize = record
            .get(k_col)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| CliError::Trace(format!("row {}: bad iteration index", line + 2)))?;
        let rec = TraceRecord {
            k,
            x: x_cols.iter().map(|c| num(*c)).collect::<Result<_>>()?,
            f: num(fixed[0])?,
            psi_reg: num(fixed[1])?,
            step_norm: num(fixed[2])?,
            proj_step_norm: num(fixed[3])?,
            residual: num(fixed[4])?,
            lambda: num(fixed[5])?,
            domain_margin: num(fixed[6])?,
        };
        let label = record.get(run_col).unwrap_or("").to_string();
        let idx = match runs.iter().position(|r| r.label == label) {
            Some(i) => i,
            None => {
                runs.push(RunTrace {
                    label: label.clone(),
                    trace: IterateTrace {
                        records: Vec::new(),
                        termination: Termination::MaxIterations,
                        projection: None,
                    },
                    extras: extra_cols
                        .iter()
                        .map(|c| (header[*c].clone(), Vec::new()))
                        .collect(),
                });
                runs.len() - 1
            }
        };
        let run = &mut runs[idx];
        run.trace.records.push(rec);
        for (j, c) in extra_cols.iter().enumerate() {
            let v = num(*c)?;
            run.extras[j].1.push(v);
        }
    }
    if runs.is_empty() {
        return Err(CliError::Trace("trace has no rows".into()));
    }
    Ok(runs)
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let text = serde_json::to_string_pretty(summary)?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes `trace.csv` and `summary.json` into `dir`, creating it if needed.
pub fn write_outputs(
    dir: &Path,
    runs: &[RunTrace],
    summary: &Summary,
) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let trace = dir.join(TRACE_FILE);
    let summ = dir.join(SUMMARY_FILE);
    write_trace(&trace, runs)?;
    write_summary(&summ, summary)?;
    Ok((trace, summ))
}

/// Re-runs the classifier on the primary run of a written trace.
pub fn reclassify(dir: &Path) -> Result<(Summary, Classification)> {
    let summary = read_summary(&dir.join(SUMMARY_FILE))?;
    let runs = read_trace(&dir.join(TRACE_FILE))?;
    let run = runs
        .iter()
        .find(|r| r.label == summary.primary_run)
        .ok_or_else(|| {
            CliError::Trace(format!(
                "primary run `{}` not in the trace",
                summary.primary_run
            ))
        })?;
    let p = summary
        .projection
        .as_deref()
        .map(projection_from_rows)
        .transpose()?;
    let c = classify_run(&run.trace, p.as_ref(), &ClassifyThresholds::default());
    Ok((summary, c))
}

/// Checks that re-reading the outputs in `dir` reproduces the recorded
/// verdict and classification statistics exactly.
pub fn verify_round_trip(dir: &Path) -> Result<Classification> {
    let (summary, c) = reclassify(dir)?;
    let same = |a: f64, b: f64| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan());
    let s = &summary.classification;
    let ok = c.verdict.label() == summary.verdict
        && c.ambiguous == summary.ambiguous
        && same(c.final_step, s.final_step)
        && same(c.final_proj_step, s.final_proj_step)
        && same(c.norm_growth, s.norm_growth)
        && same(c.winding, s.winding)
        && match (c.closest_return, s.closest_return) {
            (Some(a), Some(b)) => same(a, b),
            (None, None) => true,
            _ => false,
        };
    if !ok {
        return Err(CliError::Trace(format!(
            "re-read trace classifies as {} ({:?}), summary says {}",
            c.verdict.label(),
            summarize_classification(&c),
            summary.verdict
        )));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [
            0.0,
            -0.0,
            1.0,
            0.1,
            1.0 / 3.0,
            1e-300,
            -2.5e-7,
            6.02e23,
            f64::MAX,
            f64::MIN_POSITIVE,
            5e-324,
            f64::INFINITY,
            f64::NEG_INFINITY,
        ] {
            let s = fmt_f64(v);
            assert_eq!(
                s.parse::<f64>().unwrap().to_bits(),
                v.to_bits(),
                "{v} -> {s}"
            );
        }
        assert!(fmt_f64(f64::NAN).parse::<f64>().unwrap().is_nan());
    }
}
