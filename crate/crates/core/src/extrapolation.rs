//! Runtime factors that carry a local-machine prediction over to a target node.

use std::fmt;

use crate::bench::{io_score, AppBenchmark, MachineProfile, ProfileRegistry};
use crate::error::{Error, Result};
use crate::predictor::Prediction;
use crate::stats;
use crate::trace::MachineId;

/// Weight of the CPU ratio in the general factor; I/O gets the rest.
pub const CPU_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorSource {
    General,
    AppSpecific,
    MedianOfFactors,
}

impl FactorSource {
    pub fn as_str(self) -> &'static str {
        match self {
            FactorSource::General => "general",
            FactorSource::AppSpecific => "app",
            FactorSource::MedianOfFactors => "median",
        }
    }
}

impl fmt::Display for FactorSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeFactor {
    pub task: String,
    pub target: MachineId,
    pub factor: f64,
    pub source: FactorSource,
}

/// Equal-weight blend of the CPU and I/O score ratios, local over target.
/// The result is task independent, so `task` is left empty.
pub fn general_factor(local: &MachineProfile, target: &MachineProfile) -> RuntimeFactor {
    let cpu = local.cpu_events_per_s / target.cpu_events_per_s;
    let io = io_score(local) / io_score(target);
    RuntimeFactor {
        task: String::new(),
        target: target.machine.clone(),
        factor: CPU_WEIGHT * cpu + (1.0 - CPU_WEIGHT) * io,
        source: FactorSource::General,
    }
}

/// Ratio of application benchmark scores. Scores are throughput-like, so a
/// faster target yields a factor below one.
pub fn app_factor(local: &AppBenchmark, target: &AppBenchmark) -> Result<RuntimeFactor> {
    if local.task != target.task {
        return Err(Error::TaskMismatch(local.task.clone(), target.task.clone()));
    }
    Ok(RuntimeFactor {
        task: local.task.clone(),
        target: target.machine.clone(),
        factor: local.value / target.value,
        source: FactorSource::AppSpecific,
    })
}

/// Median of the application-specific factors known for one target.
pub fn fallback_factor(existing: &[RuntimeFactor], target: &MachineId) -> Result<RuntimeFactor> {
    let values: Vec<f64> = existing.iter().map(|f| f.factor).collect();
    let factor = stats::median(&values).ok_or_else(|| Error::NoFactors(target.to_string()))?;
    Ok(RuntimeFactor {
        task: String::new(),
        target: target.clone(),
        factor,
        source: FactorSource::MedianOfFactors,
    })
}

/// Scales point and bounds alike and retags the prediction to the target.
pub fn extrapolate(pred: &Prediction, f: &RuntimeFactor) -> Prediction {
    Prediction {
        point: pred.point * f.factor,
        lower: pred.lower * f.factor,
        upper: pred.upper * f.factor,
        confidence: pred.confidence,
        machine: f.target.clone(),
    }
}

/// All application-specific factors available for `target`, one per task
/// benchmarked on both the local machine and the target.
pub fn app_factors_for_target(reg: &ProfileRegistry, target: &MachineId) -> Vec<RuntimeFactor> {
    reg.app_benchmarks
        .iter()
        .filter(|((_, m), _)| m == target)
        .filter_map(|((task, _), tb)| {
            let lb = reg.app_benchmark(task, &reg.local)?;
            app_factor(lb, tb).ok()
        })
        .collect()
}

/// Factor for the general-benchmark method.
pub fn resolve_general(reg: &ProfileRegistry, task: &str, target: &MachineId) -> Result<RuntimeFactor> {
    let mut f = general_factor(reg.local_profile(), reg.profile(target)?);
    f.task = task.to_string();
    Ok(f)
}

/// Factor for the application-benchmark method: the task's own benchmark if
/// measured on both machines, else the median of the target's other
/// application factors, else the general factor.
pub fn resolve_app(reg: &ProfileRegistry, task: &str, target: &MachineId) -> Result<RuntimeFactor> {
    if let (Some(lb), Some(tb)) = (reg.app_benchmark(task, &reg.local), reg.app_benchmark(task, target)) {
        return app_factor(lb, tb);
    }
    let existing = app_factors_for_target(reg, target);
    if !existing.is_empty() {
        let mut f = fallback_factor(&existing, target)?;
        f.task = task.to_string();
        return Ok(f);
    }
    resolve_general(reg, task, target)
}
