use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use taskcast::bench::{load_app_benchmarks, load_profiles, ProfileRegistry};
use taskcast::evaluation::{write_cdf, write_error_records, write_mpe_table};
use taskcast::method::parse_methods;
use taskcast::pipeline::{
    build_dags, cost_report, predict_all, read_predictions, score_predictions, simulate_makespans,
    write_cost_report, write_predictions, PredictOptions, PredictionRow, SimulationOptions,
};
use taskcast::sched::billing::{BillingModel, Granularity};
use taskcast::sched::cluster::{reference_bandwidths, reference_pool};
use taskcast::sched::dag::load_edges;
use taskcast::sched::stats::{makespan_deviation_stats, write_deviation_stats};
use taskcast::synthetic::{generate, write_dir, SyntheticConfig};
use taskcast::trace::parse_trace_csv;
use taskcast::{Error, Exec, RunConfig, TraceLabel, TraceSet};

#[derive(Parser)]
#[command(name = "taskcast", version, about = "Task runtime prediction and HEFT scheduling simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit per-task models and predict runtimes on every target machine.
    Predict(Common),
    /// Score predictions against evaluation traces.
    Evaluate(Common),
    /// Run the scheduling and cost experiments.
    Simulate(Common),
    /// Write a synthetic trace set (training, evaluation, profiles, app benchmarks, DAG).
    GenSynthetic(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated: lotaru-g, lotaru-a, naive, online-m, online-p, accurate.
    #[arg(long)]
    methods: Option<String>,
    /// Prediction interval confidence, in (0, 1).
    #[arg(long)]
    confidence: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["hour", "minute"])]
    billing: Option<String>,
    /// Treat application benchmark values as runtimes rather than scores.
    #[arg(long)]
    invert_app_bench: bool,
}

impl Common {
    fn resolve(&self) -> taskcast::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = &self.methods {
            cfg.methods = parse_methods(m)?;
        }
        if let Some(c) = self.confidence {
            cfg.set("confidence", &c.to_string())?;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(b) = &self.billing {
            cfg.billing = vec![b.parse()?];
        }
        cfg.invert_app_bench |= self.invert_app_bench;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> taskcast::Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::Config(format!("config key `{key}` is required for this command")))
}

fn registry(cfg: &RunConfig) -> taskcast::Result<ProfileRegistry> {
    let mut reg = match &cfg.profiles {
        Some(p) => load_profiles(p)?,
        None => ProfileRegistry::reference(),
    };
    if let Some(p) = &cfg.app_benchmarks {
        reg = reg.with_app_benchmarks(load_app_benchmarks(p)?)?;
    }
    if cfg.invert_app_bench {
        reg.invert_app_benchmarks();
    }
    Ok(reg)
}

fn evaluation(cfg: &RunConfig) -> taskcast::Result<Option<TraceSet>> {
    cfg.evaluation
        .as_ref()
        .map(|p| parse_trace_csv(p, TraceLabel::Evaluation))
        .transpose()
}

fn output(cfg: &RunConfig, name: &str) -> taskcast::Result<(BufWriter<File>, PathBuf)> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let path = cfg.out.join(name);
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    Ok((BufWriter::new(file), path))
}

/// Predictions from `predictions` if configured, otherwise freshly fitted.
fn predictions(cfg: &RunConfig, eval: Option<&TraceSet>) -> taskcast::Result<Vec<PredictionRow>> {
    if let Some(p) = &cfg.predictions {
        let file = File::open(p).map_err(|e| Error::io(p, e))?;
        let rows = read_predictions(file, &p.display().to_string())?;
        return Ok(rows.into_iter().filter(|r| cfg.methods.contains(&r.method)).collect());
    }
    let training = parse_trace_csv(required(&cfg.training, "training")?, TraceLabel::Training)?;
    let opts = PredictOptions {
        methods: cfg.methods.clone(),
        confidence: cfg.confidence,
        seed: cfg.seed,
        query_scale: cfg.query_scale,
        ..Default::default()
    };
    predict_all(&training, eval, &registry(cfg)?, &opts)
}

fn cmd_predict(cfg: &RunConfig) -> taskcast::Result<()> {
    let eval = evaluation(cfg)?;
    let rows = predictions(cfg, eval.as_ref())?;
    let (w, path) = output(cfg, "predictions.csv")?;
    write_predictions(w, &rows)?;
    eprintln!("wrote {} predictions to {}", rows.len(), path.display());
    Ok(())
}

fn cmd_evaluate(cfg: &RunConfig) -> taskcast::Result<()> {
    let eval = evaluation(cfg)?.ok_or_else(|| Error::Config("config key `evaluation` is required".into()))?;
    let rows = predictions(cfg, Some(&eval))?;
    let records = score_predictions(&rows, &eval)?;
    let (w, path) = output(cfg, "errors.csv")?;
    write_error_records(w, &records)?;
    eprintln!("wrote {} error records to {}", records.len(), path.display());
    let (w, _) = output(cfg, "cdf.csv")?;
    write_cdf(w, &records)?;
    let (w, path) = output(cfg, "mpe.csv")?;
    let n = write_mpe_table(w, &records)?;
    eprintln!("wrote {n} MPE rows to {}", path.display());
    Ok(())
}

fn simulation_options(cfg: &RunConfig) -> SimulationOptions {
    let mut bandwidths = reference_bandwidths();
    bandwidths.extend(cfg.bandwidths.clone());
    let billing = cfg
        .granularities()
        .into_iter()
        .map(|g: Granularity| {
            let mut b = BillingModel::uniform(g, 1.0);
            b.price_per_hour = cfg.prices.clone();
            b
        })
        .collect();
    SimulationOptions {
        clusters: cfg.clusters,
        cluster_size: cfg.cluster_size,
        seed: cfg.seed,
        pool: cfg.pool.clone().unwrap_or_else(reference_pool),
        bandwidths,
        billing,
        training_set: cfg.training_set.clone(),
        validate: true,
        exec: Exec::Parallel,
    }
}

fn cmd_simulate(cfg: &RunConfig) -> taskcast::Result<()> {
    let eval = evaluation(cfg)?.ok_or_else(|| Error::Config("config key `evaluation` is required".into()))?;
    let edges = load_edges(required(&cfg.dag, "dag")?)?;
    let rows = predictions(cfg, Some(&eval))?;
    let dags = build_dags(&rows, &eval, &edges)?;
    let opts = simulation_options(cfg);
    let makespans = simulate_makespans(&dags, &cfg.methods, &opts)?;
    let stats = makespan_deviation_stats(&makespans)?;
    let (w, path) = output(cfg, "deviation_stats.csv")?;
    write_deviation_stats(w, &stats)?;
    eprintln!("simulated {} clusters of {} nodes, stats in {}", opts.clusters, opts.cluster_size, path.display());
    let costs = cost_report(&dags, &cfg.methods, &opts)?;
    let (w, path) = output(cfg, "costs.csv")?;
    write_cost_report(w, &costs)?;
    eprintln!("wrote {} cost rows to {}", costs.len(), path.display());
    Ok(())
}

fn cmd_gen_synthetic(cfg: &RunConfig) -> taskcast::Result<()> {
    let data = generate(&SyntheticConfig {
        seed: cfg.seed,
        ..Default::default()
    })?;
    write_dir(&data, &cfg.out)?;
    eprintln!(
        "wrote {} tasks in {} workflows to {}",
        data.truth.len(),
        SyntheticConfig::default().workflows,
        cfg.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, fn(&RunConfig) -> taskcast::Result<()>) = match &cli.command {
        Command::Predict(c) => (c, cmd_predict),
        Command::Evaluate(c) => (c, cmd_evaluate),
        Command::Simulate(c) => (c, cmd_simulate),
        Command::GenSynthetic(c) => (c, cmd_gen_synthetic),
    };
    let result = common.resolve().and_then(|cfg| run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("taskcast: error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
