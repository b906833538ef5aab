use std::collections::BTreeMap;

use taskcast::bench::ProfileRegistry;
use taskcast::evaluation::{median_prediction_error, GroupBy};
use taskcast::extrapolation::general_factor;
use taskcast::pipeline::{
    actual_runtimes, build_dags, cost_report, predict_all, read_predictions, score_predictions,
    simulate_makespans, write_predictions, PredictOptions, SimulationOptions,
};
use taskcast::sched::stats::makespan_deviation_stats;
use taskcast::synthetic::{generate, SyntheticConfig};
use taskcast::trace::{parse_trace_csv, TaskRun};
use taskcast::{Error, Exec, MachineId, Method, TraceLabel, TraceSet};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/three_runs.csv");

fn fixture() -> TraceSet {
    parse_trace_csv(FIXTURE, TraceLabel::Training).unwrap()
}

fn prediction_methods() -> Vec<Method> {
    Method::ALL.into_iter().filter(|m| m.is_prediction()).collect()
}

#[test]
fn row_count_is_tasks_times_targets_times_methods() {
    let reg = ProfileRegistry::reference();
    let opts = PredictOptions {
        methods: prediction_methods(),
        ..Default::default()
    };
    let rows = predict_all(&fixture(), None, &reg, &opts).unwrap();
    assert_eq!(rows.len(), 1 * 5 * 5);

    // runtimes 100.0, 100.4, 99.6 s do not correlate with size: median 100 s,
    // scaled by the general factor for each target
    for r in rows.iter().filter(|r| r.method == Method::GeneralBench) {
        let f = general_factor(reg.local_profile(), reg.profile(&r.machine).unwrap()).factor;
        assert!((r.point - 100.0 * f).abs() < 1e-9, "{r:?}");
        assert_eq!(r.lower, r.point);
    }
    // without app benchmarks at all, lotaru-a has nothing to fall back on but
    // the general factor
    for r in rows.iter().filter(|r| r.method == Method::AppBench) {
        assert_eq!(r.factor_source, "general");
    }
    for r in rows.iter().filter(|r| r.method == Method::Naive) {
        assert_eq!(r.factor, 1.0);
        assert_eq!(r.factor_source, "none");
    }
}

#[test]
fn accurate_needs_evaluation_traces() {
    let opts = PredictOptions {
        methods: vec![Method::Accurate],
        ..Default::default()
    };
    let err = predict_all(&fixture(), None, &ProfileRegistry::reference(), &opts).unwrap_err();
    assert!(err.is_config());
}

#[test]
fn training_machine_must_be_local() {
    let mut runs = fixture().runs;
    for r in &mut runs {
        r.machine = MachineId::from("A1");
    }
    let ts = TraceSet::new(runs, TraceLabel::Training).unwrap();
    let err = predict_all(&ts, None, &ProfileRegistry::reference(), &PredictOptions::default()).unwrap_err();
    assert!(matches!(err, Error::MixedMachines(_)));
}

#[test]
fn prediction_csv_round_trip() {
    let data = generate(&SyntheticConfig { workflows: 2, ..Default::default() }).unwrap();
    let rows = predict_all(&data.training, Some(&data.evaluation), &data.registry, &PredictOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_predictions(&mut buf, &rows).unwrap();
    let back = read_predictions(buf.as_slice(), "mem").unwrap();
    assert_eq!(back.len(), rows.len());
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!((&a.workflow, &a.task, &a.machine, a.method), (&b.workflow, &b.task, &b.machine, b.method));
        assert!((a.point - b.point).abs() <= 5e-4);
        assert_eq!(a.factor_source, b.factor_source);
    }
}

#[test]
fn perfect_predictions_score_zero() {
    let data = generate(&SyntheticConfig { workflows: 2, ..Default::default() }).unwrap();
    let opts = PredictOptions {
        methods: vec![Method::Accurate],
        ..Default::default()
    };
    let rows = predict_all(&data.training, Some(&data.evaluation), &data.registry, &opts).unwrap();
    let recs = score_predictions(&rows, &data.evaluation).unwrap();
    assert!(median_prediction_error(&recs, GroupBy::Machine).unwrap().iter().all(|(_, v)| *v == 0.0));
}

#[test]
fn mpe_matches_direct_computation() {
    let data = generate(&SyntheticConfig::default()).unwrap();
    let rows = predict_all(&data.training, Some(&data.evaluation), &data.registry, &PredictOptions::default()).unwrap();
    let recs = score_predictions(&rows, &data.evaluation).unwrap();
    let actual = actual_runtimes(&data.evaluation);

    // recompute lotaru-g MPE on A1 from the raw rows
    let mut errs: Vec<f64> = rows
        .iter()
        .filter(|r| r.method == Method::GeneralBench && r.machine.as_str() == "A1")
        .map(|r| {
            let a = actual[&(r.workflow.clone(), r.task.clone(), r.machine.clone())];
            (r.point - a).abs() / a
        })
        .collect();
    errs.sort_by(f64::total_cmp);
    let n = errs.len();
    let want = if n % 2 == 1 { errs[n / 2] } else { 0.5 * (errs[n / 2 - 1] + errs[n / 2]) };

    let g: Vec<_> = recs.into_iter().filter(|r| r.method == "lotaru-g").collect();
    let got: BTreeMap<String, f64> = median_prediction_error(&g, GroupBy::Machine).unwrap().into_iter().collect();
    assert!((got["A1"] - want).abs() < 1e-12);
}

#[test]
fn missing_machine_in_evaluation_is_reported() {
    let data = generate(&SyntheticConfig { workflows: 1, ..Default::default() }).unwrap();
    let rows = predict_all(&data.training, None, &data.registry, &PredictOptions::default()).unwrap();
    let kept: Vec<TaskRun> = data.evaluation.runs.iter().filter(|r| r.machine.as_str() != "N1").cloned().collect();
    let eval = TraceSet::new(kept, TraceLabel::Evaluation).unwrap();
    let err = score_predictions(&rows, &eval).unwrap_err();
    assert!(matches!(err, Error::MissingActual { ref machine, .. } if machine == "N1"), "{err}");
}

#[test]
fn sequential_and_parallel_agree() {
    let data = generate(&SyntheticConfig { seed: 4, ..Default::default() }).unwrap();
    let run = |exec: Exec| {
        let opts = PredictOptions {
            methods: Method::ALL.to_vec(),
            exec,
            ..Default::default()
        };
        let rows = predict_all(&data.training, Some(&data.evaluation), &data.registry, &opts).unwrap();
        let dags = build_dags(&rows, &data.evaluation, &data.edges).unwrap();
        let sim = SimulationOptions {
            clusters: 25,
            exec,
            ..Default::default()
        };
        (rows, simulate_makespans(&dags, &Method::ALL, &sim).unwrap())
    };
    let (ra, ma) = run(Exec::Sequential);
    let (rb, mb) = run(Exec::Parallel);
    assert_eq!(ra, rb);
    assert_eq!(ma, mb);
}

#[test]
fn accurate_only_sweep_has_zero_deviation() {
    let data = generate(&SyntheticConfig { workflows: 3, ..Default::default() }).unwrap();
    let rows = predict_all(&data.training, Some(&data.evaluation), &data.registry, &PredictOptions::default()).unwrap();
    let dags = build_dags(&rows, &data.evaluation, &data.edges).unwrap();
    let sim = SimulationOptions { clusters: 10, ..Default::default() };
    let ms = simulate_makespans(&dags, &[Method::Accurate], &sim).unwrap();
    let stats = makespan_deviation_stats(&ms).unwrap();
    assert_eq!(stats.len(), 1);
    assert_eq!(stats[0].mean, 0.0);
    assert!(stats[0].percentiles.iter().all(|&p| p == 0.0));

    let costs = cost_report(&dags, &[Method::Accurate], &sim).unwrap();
    assert_eq!(costs.len(), 3 * 2);
    assert!(costs.iter().all(|c| c.deviation_pct == 0.0));
}
