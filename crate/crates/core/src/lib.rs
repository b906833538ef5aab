//! Task runtime prediction for heterogeneous clusters.
//!
//! A per-task Bayesian linear model is fitted on a handful of local
//! profiling runs of downsampled input, then scaled to each target machine
//! type by benchmark-derived runtime factors. The [`sched`] module replays
//! the predictions in a HEFT scheduling simulation and estimates rental
//! cost under hourly or per-minute billing.

pub mod baselines;
pub mod bench;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod extrapolation;
pub mod method;
pub mod pipeline;
pub mod predictor;
pub mod sched;
pub mod stats;
pub mod synthetic;
pub mod trace;

pub use bench::{MachineProfile, ProfileRegistry};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use exec::Exec;
pub use method::Method;
pub use predictor::{fit_task_model, predict_local, Prediction, TaskModel};
pub use trace::{MachineId, TaskRun, TraceLabel, TraceSet};
