//! End-to-end glue: fit per-task models, emit per-target predictions for
//! every method, score them against evaluation traces, and run the
//! scheduling and cost experiments on top.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use rand::Rng;

use crate::baselines::{naive_predict, online_predict, NaiveModel, OnlineModel, OnlineVariant};
use crate::bench::ProfileRegistry;
use crate::error::{Error, Result};
use crate::evaluation::ErrorRecord;
use crate::exec::Exec;
use crate::extrapolation::{extrapolate, resolve_app, resolve_general};
use crate::method::Method;
use crate::predictor::{fit_task_model_with, predict_local, FitOptions, Prediction};
use crate::sched::billing::{cost_deviation_pct, predict_cost, BillingModel, Granularity};
use crate::sched::cluster::{cluster_rng, draw_cluster, ClusterSpec};
use crate::sched::dag::{build_workflow_dags, DagTask, EdgeRow, RuntimeSource, RuntimeTable, WorkflowDag};
use crate::sched::execute::replay_with_costs;
use crate::sched::heft::heft_with_costs;
use crate::sched::validate::validate_schedule;
use crate::stats::median;
use crate::trace::{group_by_workflow_task, MachineId, TaskRun, TraceSet};

pub const PREDICTION_HEADER: [&str; 10] = [
    "workflow",
    "task",
    "machine",
    "method",
    "point_s",
    "lower_s",
    "upper_s",
    "confidence",
    "factor",
    "factor_source",
];
pub const COST_HEADER: [&str; 5] = ["workflow", "training_set", "method", "billing", "deviation_pct"];

type TaskKey = (String, String);

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub workflow: String,
    pub task: String,
    pub machine: MachineId,
    pub method: Method,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub confidence: f64,
    pub factor: f64,
    /// `general`, `app`, `median`, `none` for baselines, `actual` for measured rows.
    pub factor_source: String,
}

#[derive(Debug, Clone)]
pub struct PredictOptions {
    pub methods: Vec<Method>,
    pub confidence: f64,
    pub seed: u64,
    /// Query size when no evaluation trace is given: this multiple of the
    /// largest training input of the task.
    pub query_scale: f64,
    pub fit: FitOptions,
    pub exec: Exec,
}

impl Default for PredictOptions {
    fn default() -> Self {
        PredictOptions {
            methods: vec![
                Method::GeneralBench,
                Method::AppBench,
                Method::Naive,
                Method::OnlineM,
                Method::OnlineP,
            ],
            confidence: 0.95,
            seed: 0,
            query_scale: 10.0,
            fit: FitOptions::default(),
            exec: Exec::default(),
        }
    }
}

fn group_median<F: Fn(&TaskRun) -> f64>(runs: &[&TaskRun], f: F) -> f64 {
    median(&runs.iter().map(|r| f(r)).collect::<Vec<_>>()).expect("nonempty group")
}

/// Input size each task is predicted for: the median full-size input seen
/// in the evaluation traces, else `scale` times the largest training input.
pub fn query_sizes(training: &TraceSet, evaluation: Option<&TraceSet>, scale: f64) -> BTreeMap<TaskKey, f64> {
    let mut eval_runs: BTreeMap<TaskKey, Vec<&TaskRun>> = BTreeMap::new();
    if let Some(ev) = evaluation {
        for r in &ev.runs {
            eval_runs.entry((r.workflow.clone(), r.task.clone())).or_default().push(r);
        }
    }
    group_by_workflow_task(training)
        .into_iter()
        .map(|(key, runs)| {
            let size = match eval_runs.get(&key) {
                Some(ev) => group_median(ev, |r| r.input_size_uncompressed as f64),
                None => {
                    scale * runs.iter().map(|r| r.input_size_uncompressed).max().unwrap_or(0) as f64
                }
            };
            (key, size)
        })
        .collect()
}

/// Measured runtime per (workflow, task, machine): median over instances.
pub fn actual_runtimes(evaluation: &TraceSet) -> BTreeMap<(String, String, MachineId), f64> {
    let mut groups: BTreeMap<(String, String, MachineId), Vec<&TaskRun>> = BTreeMap::new();
    for r in &evaluation.runs {
        groups
            .entry((r.workflow.clone(), r.task.clone(), r.machine.clone()))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|(k, runs)| (k, group_median(&runs, TaskRun::runtime_secs)))
        .collect()
}

fn row(
    key: &TaskKey,
    machine: &MachineId,
    method: Method,
    p: &Prediction,
    factor: f64,
    source: &str,
) -> PredictionRow {
    PredictionRow {
        workflow: key.0.clone(),
        task: key.1.clone(),
        machine: machine.clone(),
        method,
        point: p.point,
        lower: p.lower,
        upper: p.upper,
        confidence: p.confidence,
        factor,
        factor_source: source.to_string(),
    }
}

/// Predictions for every trained task on every target machine of `reg`,
/// one row per (task, target, method).
pub fn predict_all(
    training: &TraceSet,
    evaluation: Option<&TraceSet>,
    reg: &ProfileRegistry,
    opts: &PredictOptions,
) -> Result<Vec<PredictionRow>> {
    if training.is_empty() {
        return Err(Error::EmptyTrace {
            path: "<training>".into(),
        });
    }
    if let Some(m) = training.runs.first().map(|r| &r.machine) {
        if *m != reg.local {
            return Err(Error::MixedMachines(format!(
                "training runs come from `{m}`, but the local profile is `{}`",
                reg.local
            )));
        }
    }
    if opts.methods.contains(&Method::Accurate) && evaluation.is_none() {
        return Err(Error::Config("method `accurate` needs an evaluation trace".into()));
    }
    let groups: Vec<(TaskKey, Vec<TaskRun>)> = group_by_workflow_task(training).into_iter().collect();
    let sizes = query_sizes(training, evaluation, opts.query_scale);
    let actuals = evaluation.map(actual_runtimes);
    let targets = reg.targets();
    let needs_model = opts
        .methods
        .iter()
        .any(|m| matches!(m, Method::GeneralBench | Method::AppBench));

    let per_task = opts.exec.try_map(groups.len(), |gi| -> Result<Vec<PredictionRow>> {
        let (key, runs) = &groups[gi];
        let size = sizes[key];
        let model = if needs_model {
            Some(fit_task_model_with(runs, opts.fit)?)
        } else {
            None
        };
        let local = model.as_ref().map(|m| predict_local(m, size, opts.confidence));
        let mut rows = Vec::new();
        for target in &targets {
            for &method in &opts.methods {
                let r = match method {
                    Method::GeneralBench | Method::AppBench => {
                        let f = if method == Method::GeneralBench {
                            resolve_general(reg, &key.1, target)?
                        } else {
                            resolve_app(reg, &key.1, target)?
                        };
                        let p = extrapolate(local.as_ref().expect("model fitted"), &f);
                        row(key, target, method, &p, f.factor, f.source.as_str())
                    }
                    Method::Naive | Method::OnlineM | Method::OnlineP => {
                        let point = match method {
                            Method::Naive => naive_predict(&NaiveModel::fit(runs)?, size),
                            Method::OnlineM => online_predict(&OnlineModel::fit(runs, OnlineVariant::M)?, size, 0),
                            _ => online_predict(
                                &OnlineModel::fit(runs, OnlineVariant::P)?,
                                size,
                                opts.seed.wrapping_add(gi as u64),
                            ),
                        };
                        let p = Prediction {
                            point,
                            lower: point,
                            upper: point,
                            confidence: opts.confidence,
                            machine: target.clone(),
                        };
                        row(key, target, method, &p, 1.0, "none")
                    }
                    Method::Accurate => {
                        let actual = actuals
                            .as_ref()
                            .and_then(|a| a.get(&(key.0.clone(), key.1.clone(), target.clone())))
                            .copied()
                            .ok_or_else(|| Error::MissingActual {
                                task: format!("{}/{}", key.0, key.1),
                                machine: target.to_string(),
                            })?;
                        let p = Prediction {
                            point: actual,
                            lower: actual,
                            upper: actual,
                            confidence: opts.confidence,
                            machine: target.clone(),
                        };
                        row(key, target, method, &p, 1.0, "actual")
                    }
                };
                rows.push(r);
            }
        }
        Ok(rows)
    })?;
    Ok(per_task.into_iter().flatten().collect())
}

pub fn write_predictions<W: Write>(w: W, rows: &[PredictionRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(PREDICTION_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.workflow.clone(),
            r.task.clone(),
            r.machine.to_string(),
            r.method.to_string(),
            format!("{:.3}", r.point),
            format!("{:.3}", r.lower),
            format!("{:.3}", r.upper),
            format!("{}", r.confidence),
            format!("{:.6}", r.factor),
            r.factor_source.clone(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<prediction writer>", e))?;
    Ok(())
}

pub fn read_predictions<R: Read>(reader: R, path: &str) -> Result<Vec<PredictionRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 10];
    for (slot, name) in idx.iter_mut().zip(PREDICTION_HEADER) {
        *slot = headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::MissingColumn {
            path: path.to_string(),
            name: name.to_string(),
        })?;
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |c: usize| rec.get(idx[c]).unwrap_or("").trim();
        let bad = |c: usize| Error::BadValue {
            path: path.to_string(),
            row: i + 1,
            column: PREDICTION_HEADER[c].to_string(),
            value: get(c).to_string(),
        };
        let num = |c: usize| get(c).parse::<f64>().map_err(|_| bad(c));
        out.push(PredictionRow {
            workflow: get(0).to_string(),
            task: get(1).to_string(),
            machine: MachineId::new(get(2)).map_err(|_| bad(2))?,
            method: get(3).parse().map_err(|_| bad(3))?,
            point: num(4)?,
            lower: num(5)?,
            upper: num(6)?,
            confidence: num(7)?,
            factor: num(8)?,
            factor_source: get(9).to_string(),
        });
    }
    Ok(out)
}

/// One error record per prediction row, scored against the measured runtime.
pub fn score_predictions(rows: &[PredictionRow], evaluation: &TraceSet) -> Result<Vec<ErrorRecord>> {
    let actuals = actual_runtimes(evaluation);
    rows.iter()
        .map(|r| {
            let actual = actuals
                .get(&(r.workflow.clone(), r.task.clone(), r.machine.clone()))
                .copied()
                .ok_or_else(|| Error::MissingActual {
                    task: format!("{}/{}", r.workflow, r.task),
                    machine: r.machine.to_string(),
                })?;
            ErrorRecord::new(&r.workflow, &r.task, r.machine.as_str(), r.method.as_str(), r.point, actual)
        })
        .collect()
}

/// One DAG per workflow with measured runtimes and every method's estimates.
/// Edges without a transfer size use the producer's median output bytes.
pub fn build_dags(
    rows: &[PredictionRow],
    evaluation: &TraceSet,
    edges: &[EdgeRow],
) -> Result<BTreeMap<String, WorkflowDag>> {
    let actuals = actual_runtimes(evaluation);
    let mut tasks: BTreeMap<TaskKey, DagTask> = BTreeMap::new();
    for ((w, t, m), rt) in &actuals {
        tasks
            .entry((w.clone(), t.clone()))
            .or_insert_with(|| DagTask {
                workflow: w.clone(),
                name: t.clone(),
                actual: RuntimeTable::new(),
                estimates: BTreeMap::new(),
            })
            .actual
            .insert(m.clone(), *rt);
    }
    for r in rows {
        if let Some(t) = tasks.get_mut(&(r.workflow.clone(), r.task.clone())) {
            t.estimates
                .entry(r.method.to_string())
                .or_default()
                .insert(r.machine.clone(), r.point);
        }
    }
    let mut outputs: BTreeMap<TaskKey, Vec<&TaskRun>> = BTreeMap::new();
    for r in &evaluation.runs {
        outputs.entry((r.workflow.clone(), r.task.clone())).or_default().push(r);
    }
    let output_bytes: HashMap<TaskKey, u64> = outputs
        .into_iter()
        .map(|(k, runs)| (k, group_median(&runs, |r| r.io_write as f64) as u64))
        .collect();
    build_workflow_dags(tasks.into_values().collect(), edges, &output_bytes)
}

#[derive(Debug, Clone)]
pub struct SimulationOptions {
    pub clusters: usize,
    pub cluster_size: usize,
    pub seed: u64,
    pub pool: Vec<MachineId>,
    pub bandwidths: BTreeMap<MachineId, f64>,
    pub billing: Vec<BillingModel>,
    pub training_set: String,
    /// Run the schedule validator on every planned and realized schedule.
    pub validate: bool,
    pub exec: Exec,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            clusters: 200,
            cluster_size: 20,
            seed: 0,
            pool: crate::sched::cluster::reference_pool(),
            bandwidths: crate::sched::cluster::reference_bandwidths(),
            billing: vec![
                BillingModel::uniform(Granularity::Hour, 1.0),
                BillingModel::uniform(Granularity::Minute, 1.0),
            ],
            training_set: "0".into(),
            validate: true,
            exec: Exec::default(),
        }
    }
}

/// Salt separating the workflow-pair draw from the node draws of a cluster.
const PAIR_STREAM: u64 = 0x5851_f42d_4c95_7f2d;

/// The cluster and workflow pair simulated at sweep position `index`.
pub fn sweep_instance(
    index: usize,
    workflows: &[&String],
    opts: &SimulationOptions,
) -> (ClusterSpec, (usize, usize)) {
    let seed = opts.seed.wrapping_add(index as u64);
    let cluster = draw_cluster(
        &mut cluster_rng(opts.seed, index),
        opts.cluster_size,
        &opts.pool,
        &opts.bandwidths,
        seed,
    );
    let mut rng = cluster_rng(seed ^ PAIR_STREAM, 0);
    let n = workflows.len();
    let a = rng.random_range(0..n);
    let b = if n > 1 {
        (a + 1 + rng.random_range(0..n - 1)) % n
    } else {
        a
    };
    (cluster, (a, b))
}

/// Plans `dag` on `cluster` with `method`'s runtimes and replays it with the
/// measured ones. Returns (planned, realized) schedules.
pub fn plan_and_execute(
    dag: &WorkflowDag,
    cluster: &ClusterSpec,
    method: Method,
    validate: bool,
) -> Result<(crate::sched::Schedule, crate::sched::Schedule)> {
    let actual = dag.cost_matrix(&cluster.nodes, RuntimeSource::Actual)?;
    let estimates = if method == Method::Accurate {
        actual.clone()
    } else {
        dag.cost_matrix(&cluster.nodes, RuntimeSource::Estimate(method.as_str()))?
    };
    let planned = heft_with_costs(&estimates, &dag.edges, cluster)?;
    let realized = replay_with_costs(&planned, &actual, &dag.edges, cluster);
    if validate {
        validate_schedule(&planned, &estimates, &dag.edges, cluster)
            .and_then(|_| validate_schedule(&realized, &actual, &dag.edges, cluster))
            .map_err(|e| Error::InvalidDag(format!("invalid schedule for {method}: {e}")))?;
    }
    Ok((planned, realized))
}

/// Realized makespan per method on each generated cluster, two workflows
/// co-scheduled per cluster.
pub fn simulate_makespans(
    dags: &BTreeMap<String, WorkflowDag>,
    methods: &[Method],
    opts: &SimulationOptions,
) -> Result<BTreeMap<String, Vec<f64>>> {
    if dags.is_empty() {
        return Err(Error::EmptyInput);
    }
    let names: Vec<&String> = dags.keys().collect();
    let per_cluster = opts.exec.try_map(opts.clusters, |i| -> Result<Vec<f64>> {
        let (cluster, (a, b)) = sweep_instance(i, &names, opts);
        let merged = if a == b {
            dags[names[a]].clone()
        } else {
            WorkflowDag::merge(&[&dags[names[a]], &dags[names[b]]])
        };
        methods
            .iter()
            .map(|&m| plan_and_execute(&merged, &cluster, m, opts.validate).map(|(_, r)| r.makespan))
            .collect()
    })?;
    Ok(methods
        .iter()
        .enumerate()
        .map(|(mi, m)| (m.to_string(), per_cluster.iter().map(|v| v[mi]).collect()))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostRow {
    pub workflow: String,
    pub training_set: String,
    pub method: Method,
    pub billing: Granularity,
    pub planned_cost: f64,
    pub actual_cost: f64,
    pub deviation_pct: f64,
}

/// Predicted-versus-actual rental cost for each workflow run alone on the
/// first sweep cluster, for every method and billing model.
pub fn cost_report(
    dags: &BTreeMap<String, WorkflowDag>,
    methods: &[Method],
    opts: &SimulationOptions,
) -> Result<Vec<CostRow>> {
    let names: Vec<&String> = dags.keys().collect();
    if names.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (cluster, _) = sweep_instance(0, &names, opts);
    let mut out = Vec::new();
    for (name, dag) in dags {
        for &method in methods {
            let (planned, realized) = plan_and_execute(dag, &cluster, method, opts.validate)?;
            for billing in &opts.billing {
                let planned_cost = predict_cost(&planned, &cluster, billing);
                let actual_cost = predict_cost(&realized, &cluster, billing);
                out.push(CostRow {
                    workflow: name.clone(),
                    training_set: opts.training_set.clone(),
                    method,
                    billing: billing.granularity,
                    planned_cost,
                    actual_cost,
                    deviation_pct: cost_deviation_pct(planned_cost, actual_cost),
                });
            }
        }
    }
    Ok(out)
}

pub fn write_cost_report<W: Write>(w: W, rows: &[CostRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(COST_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.workflow.clone(),
            r.training_set.clone(),
            r.method.to_string(),
            r.billing.to_string(),
            format!("{:.2}", r.deviation_pct),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<cost writer>", e))?;
    Ok(())
}
