//! Synthetic workflow traces for desk-scale runs.
//!
//! Each task's local runtime is either linear in input size or constant.
//! Target runtimes scale the local runtime by a per-task mix of the CPU and
//! I/O speed ratios of the reference profiles, so the general benchmark
//! factor is close but not exact and the application benchmark is exact up
//! to a little measurement noise.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::bench::{io_score, write_app_benchmarks, write_profiles, AppBenchmark, ProfileRegistry};
use crate::error::{Error, Result};
use crate::sched::dag::{write_edges, EdgeRow};
use crate::trace::{write_trace_csv, MachineId, TaskRun, TraceLabel, TraceSet};

pub const TRAINING_FILE: &str = "training.csv";
pub const EVALUATION_FILE: &str = "evaluation.csv";
pub const PROFILES_FILE: &str = "profiles.csv";
pub const APP_BENCH_FILE: &str = "app_benchmarks.csv";
pub const DAG_FILE: &str = "dag.csv";

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub workflows: usize,
    pub min_tasks: usize,
    pub max_tasks: usize,
    /// Relative standard deviation of the multiplicative runtime noise.
    pub noise: f64,
    pub constant_fraction: f64,
    pub app_bench_fraction: f64,
    /// Training input sizes as fractions of the full input.
    pub partitions: Vec<f64>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 0,
            workflows: 5,
            min_tasks: 5,
            max_tasks: 9,
            noise: 0.10,
            constant_fraction: 0.2,
            app_bench_fraction: 0.7,
            partitions: vec![0.02, 0.04, 0.06, 0.08, 0.10],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuntimeShape {
    /// `intercept + slope * size`, seconds and bytes.
    Linear { intercept: f64, slope: f64 },
    Constant { runtime: f64 },
}

impl RuntimeShape {
    pub fn local_runtime(&self, size: f64) -> f64 {
        match *self {
            RuntimeShape::Linear { intercept, slope } => intercept + slope * size,
            RuntimeShape::Constant { runtime } => runtime,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskTruth {
    pub workflow: String,
    pub task: String,
    pub full_size: u64,
    pub shape: RuntimeShape,
    pub cpu_weight: f64,
    /// Noise-free target/local runtime ratio per machine.
    pub factors: BTreeMap<MachineId, f64>,
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub training: TraceSet,
    pub evaluation: TraceSet,
    pub registry: ProfileRegistry,
    pub app_benchmarks: Vec<AppBenchmark>,
    pub edges: Vec<EdgeRow>,
    pub truth: Vec<TaskTruth>,
}

fn noisy(rng: &mut ChaCha8Rng, noise: &Normal<f64>, value: f64) -> f64 {
    // keep a tiny floor so a 4-sigma draw cannot produce a nonpositive runtime
    (value * (1.0 + noise.sample(rng))).max(0.05 * value)
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    if cfg.workflows == 0 || cfg.min_tasks == 0 || cfg.min_tasks > cfg.max_tasks {
        return Err(Error::Config("synthetic generator needs workflows >= 1 and 1 <= min_tasks <= max_tasks".into()));
    }
    if cfg.partitions.len() < 3 || cfg.partitions.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::Config("synthetic generator needs at least 3 positive partitions".into()));
    }
    let noise = Normal::new(0.0, cfg.noise).map_err(|e| Error::Config(format!("noise: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let base = ProfileRegistry::reference();
    let local = base.local_profile().clone();
    let machines: Vec<MachineId> = base.profiles.keys().cloned().collect();

    let mut training = Vec::new();
    let mut evaluation = Vec::new();
    let mut benches = Vec::new();
    let mut edges = Vec::new();
    let mut truth = Vec::new();

    for w in 0..cfg.workflows {
        let workflow = format!("wf{}", w + 1);
        let n_tasks = rng.random_range(cfg.min_tasks..=cfg.max_tasks);
        let mut outputs = Vec::with_capacity(n_tasks);
        for t in 0..n_tasks {
            let task = format!("{workflow}_t{}", t + 1);
            let full_size = rng.random_range(2e9..2e10f64).round();
            let shape = if rng.random_bool(cfg.constant_fraction) {
                RuntimeShape::Constant {
                    runtime: rng.random_range(30.0..600.0),
                }
            } else {
                let intercept = rng.random_range(10.0..60.0);
                let scaled = rng.random_range(300.0..3000.0);
                RuntimeShape::Linear {
                    intercept,
                    slope: scaled / full_size,
                }
            };
            let cpu_weight = rng.random_range(0.15..0.85);
            let factors: BTreeMap<MachineId, f64> = base
                .profiles
                .iter()
                .map(|(m, p)| {
                    let f = cpu_weight * local.cpu_events_per_s / p.cpu_events_per_s
                        + (1.0 - cpu_weight) * io_score(&local) / io_score(p);
                    (m.clone(), f)
                })
                .collect();
            let out_bytes = (full_size * rng.random_range(0.02..0.2)).round() as u64;
            outputs.push(out_bytes);

            for (i, frac) in cfg.partitions.iter().enumerate() {
                let size = full_size * frac;
                let secs = noisy(&mut rng, &noise, shape.local_runtime(size));
                training.push(TaskRun {
                    workflow: workflow.clone(),
                    task: task.clone(),
                    instance_id: format!("p{i}"),
                    machine: base.local.clone(),
                    input_size_uncompressed: size.round() as u64,
                    input_size_compressed: None,
                    runtime_ms: (secs * 1000.0).round() as u64,
                    io_read: size.round() as u64,
                    io_write: (out_bytes as f64 * frac).round() as u64,
                    cpu_utilization: None,
                    peak_memory: None,
                });
            }
            for m in &machines {
                let secs = noisy(&mut rng, &noise, shape.local_runtime(full_size) * factors[m]);
                evaluation.push(TaskRun {
                    workflow: workflow.clone(),
                    task: task.clone(),
                    instance_id: "full".into(),
                    machine: m.clone(),
                    input_size_uncompressed: full_size as u64,
                    input_size_compressed: None,
                    runtime_ms: (secs * 1000.0).round() as u64,
                    io_read: full_size as u64,
                    io_write: out_bytes,
                    cpu_utilization: None,
                    peak_memory: None,
                });
            }
            if rng.random_bool(cfg.app_bench_fraction) {
                // throughput-like score: inverse of the true slowdown, 2% jitter
                let scale = rng.random_range(10.0..1000.0);
                for m in &machines {
                    let jitter = 1.0 + 0.02 * rng.random_range(-1.0..1.0);
                    benches.push(AppBenchmark {
                        task: task.clone(),
                        machine: m.clone(),
                        value: scale / factors[m] * jitter,
                    });
                }
            }
            // layered precedence: every task after the first depends on one
            // or two earlier tasks
            if t > 0 {
                let first = rng.random_range(0..t);
                let mut preds = vec![first];
                if t > 1 && rng.random_bool(0.4) {
                    let second = rng.random_range(0..t);
                    if second != first {
                        preds.push(second);
                    }
                }
                preds.sort_unstable();
                for p in preds {
                    edges.push(EdgeRow {
                        workflow: workflow.clone(),
                        from_task: format!("{workflow}_t{}", p + 1),
                        to_task: task.clone(),
                        transfer_bytes: Some(outputs[p]),
                    });
                }
            }
            truth.push(TaskTruth {
                workflow: workflow.clone(),
                task,
                full_size: full_size as u64,
                shape,
                cpu_weight,
                factors,
            });
        }
    }

    let registry = base.with_app_benchmarks(benches.clone())?;
    Ok(SyntheticData {
        training: TraceSet::new(training, TraceLabel::Training)?,
        evaluation: TraceSet::new(evaluation, TraceLabel::Evaluation)?,
        registry,
        app_benchmarks: benches,
        edges,
        truth,
    })
}

fn create(dir: &Path, name: &str) -> Result<File> {
    let path = dir.join(name);
    File::create(&path).map_err(|e| Error::io(&path, e))
}

/// Writes the five input files of a synthetic run into `dir`.
pub fn write_dir(data: &SyntheticData, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_trace_csv(create(dir, TRAINING_FILE)?, &data.training)?;
    write_trace_csv(create(dir, EVALUATION_FILE)?, &data.evaluation)?;
    write_profiles(create(dir, PROFILES_FILE)?, &data.registry)?;
    write_app_benchmarks(create(dir, APP_BENCH_FILE)?, &data.app_benchmarks)?;
    write_edges(create(dir, DAG_FILE)?, &data.edges)?;
    Ok(())
}
