//! Prediction-error metrics.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub workflow: String,
    pub task: String,
    pub machine: String,
    pub method: String,
    pub predicted: f64,
    pub actual: f64,
    pub error: f64,
}

impl ErrorRecord {
    pub fn new(
        workflow: impl Into<String>,
        task: impl Into<String>,
        machine: impl Into<String>,
        method: impl Into<String>,
        predicted: f64,
        actual: f64,
    ) -> Result<Self> {
        Ok(ErrorRecord {
            workflow: workflow.into(),
            task: task.into(),
            machine: machine.into(),
            method: method.into(),
            predicted,
            actual,
            error: task_error(predicted, actual)?,
        })
    }
}

/// Relative absolute error `|predicted - actual| / actual`.
pub fn task_error(predicted: f64, actual: f64) -> Result<f64> {
    if !(actual > 0.0) {
        return Err(Error::ZeroActual);
    }
    Ok(((predicted - actual) / actual).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Machine,
    Workflow,
    Method,
    All,
}

impl GroupBy {
    fn key(self, r: &ErrorRecord) -> &str {
        match self {
            GroupBy::Machine => &r.machine,
            GroupBy::Workflow => &r.workflow,
            GroupBy::Method => &r.method,
            GroupBy::All => "all",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GroupBy::Machine => "machine",
            GroupBy::Workflow => "workflow",
            GroupBy::Method => "method",
            GroupBy::All => "all",
        }
    }
}

/// Median error per group, groups in name order.
pub fn median_prediction_error(records: &[ErrorRecord], group_by: GroupBy) -> Result<Vec<(String, f64)>> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry(group_by.key(r)).or_default().push(r.error);
    }
    Ok(groups
        .into_iter()
        .map(|(k, v)| (k.to_string(), stats::median(&v).expect("nonempty group")))
        .collect())
}

/// Empirical CDF as `(error, fraction <= error)` steps; equal errors share
/// one step.
pub fn error_cdf(records: &[ErrorRecord]) -> Result<Vec<(f64, f64)>> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut errs: Vec<f64> = records.iter().map(|r| r.error).collect();
    errs.sort_by(f64::total_cmp);
    let n = errs.len();
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(n);
    for (i, e) in errs.into_iter().enumerate() {
        let frac = if i + 1 == n { 1.0 } else { (i + 1) as f64 / n as f64 };
        match out.last_mut() {
            Some(last) if last.0 == e => last.1 = frac,
            _ => out.push((e, frac)),
        }
    }
    Ok(out)
}

pub fn write_error_records<W: Write>(w: W, records: &[ErrorRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["workflow", "task", "machine", "method", "predicted_s", "actual_s", "error_pct"])?;
    for r in records {
        wtr.write_record([
            r.workflow.clone(),
            r.task.clone(),
            r.machine.clone(),
            r.method.clone(),
            format!("{:.3}", r.predicted),
            format!("{:.3}", r.actual),
            format!("{:.2}", r.error * 100.0),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<error report>", e))?;
    Ok(())
}

/// Plot-ready CDF rows `error,fraction,method`, one block per method.
pub fn write_cdf<W: Write>(w: W, records: &[ErrorRecord]) -> Result<()> {
    let mut by_method: BTreeMap<&str, Vec<ErrorRecord>> = BTreeMap::new();
    for r in records {
        by_method.entry(&r.method).or_default().push(r.clone());
    }
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["error", "fraction", "method"])?;
    for (method, recs) in by_method {
        for (e, f) in error_cdf(&recs)? {
            wtr.write_record([format!("{e:.6}"), format!("{f:.6}"), method.to_string()])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<cdf>", e))?;
    Ok(())
}

/// MPE table `method,group_by,group,mpe_pct`: per method, one row per
/// machine followed by the overall value.
pub fn write_mpe_table<W: Write>(w: W, records: &[ErrorRecord]) -> Result<usize> {
    let mut by_method: BTreeMap<&str, Vec<ErrorRecord>> = BTreeMap::new();
    for r in records {
        by_method.entry(&r.method).or_default().push(r.clone());
    }
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["method", "group_by", "group", "mpe_pct"])?;
    let mut rows = 0;
    for (method, recs) in by_method {
        for group_by in [GroupBy::Machine, GroupBy::All] {
            for (group, v) in median_prediction_error(&recs, group_by)? {
                wtr.write_record([method, group_by.as_str(), &group, &format!("{:.2}", v * 100.0)])?;
                rows += 1;
            }
        }
    }
    wtr.flush().map_err(|e| Error::io("<mpe table>", e))?;
    Ok(rows)
}
