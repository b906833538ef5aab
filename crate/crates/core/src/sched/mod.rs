//! Discrete HEFT scheduling simulation over generated heterogeneous clusters.
//!
//! Plans are made with one runtime source (an estimate method) and then
//! replayed with the measured runtimes, keeping the plan's node mapping.

pub mod billing;
pub mod cluster;
pub mod dag;
pub mod execute;
pub mod heft;
pub mod stats;
pub mod validate;

pub use billing::{cost_deviation_pct, predict_cost, BillingModel, Granularity};
pub use cluster::{generate_clusters, ClusterSpec};
pub use dag::{DagEdge, DagTask, RuntimeSource, WorkflowDag};
pub use execute::{execute_with_actuals, replay_with_costs};
pub use heft::{heft, heft_with_costs, Schedule, Slot};
pub use stats::{makespan_deviation_stats, DeviationStats};
pub use validate::validate_schedule;
