use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::sched::cluster::ClusterSpec;
use crate::sched::heft::Schedule;
use crate::trace::MachineId;

/// Relative tolerance when rounding usage up to whole billing units, so a
/// window of exactly one hour is not billed as two.
const UNIT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    Hour,
    Minute,
}

impl Granularity {
    pub fn seconds(self) -> f64 {
        match self {
            Granularity::Hour => 3600.0,
            Granularity::Minute => 60.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Hour => "hour",
            Granularity::Minute => "minute",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "hour" => Ok(Granularity::Hour),
            "minute" => Ok(Granularity::Minute),
            other => Err(Error::Config(format!("billing must be `hour` or `minute`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BillingModel {
    pub granularity: Granularity,
    /// Hourly price; machines not listed cost `default_price`. A minute
    /// is billed at 1/60 of the hourly price.
    pub price_per_hour: BTreeMap<MachineId, f64>,
    pub default_price: f64,
}

impl BillingModel {
    pub fn uniform(granularity: Granularity, price: f64) -> Self {
        BillingModel {
            granularity,
            price_per_hour: BTreeMap::new(),
            default_price: price,
        }
    }

    pub fn price(&self, m: &MachineId) -> f64 {
        self.price_per_hour.get(m).copied().unwrap_or(self.default_price)
    }

    /// Whole billing units for a usage window; any used node pays at least one.
    pub fn units(&self, seconds: f64) -> f64 {
        let raw = seconds / self.granularity.seconds();
        (raw - UNIT_EPS * raw.max(1.0)).ceil().max(1.0)
    }
}

/// Rental cost of a schedule: every used node is rented from its first task
/// start to its last task finish, rounded up to whole billing units.
pub fn predict_cost(sched: &Schedule, cluster: &ClusterSpec, billing: &BillingModel) -> f64 {
    let hours = billing.granularity.seconds() / 3600.0;
    let mut windows: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for s in &sched.assignments {
        let w = windows.entry(s.node).or_insert((f64::INFINITY, f64::NEG_INFINITY));
        w.0 = w.0.min(s.start);
        w.1 = w.1.max(s.finish);
    }
    windows
        .into_iter()
        .map(|(node, (start, end))| billing.units(end - start) * hours * billing.price(&cluster.nodes[node]))
        .sum()
}

/// Percentage by which the planned cost over- or under-shoots the realized cost.
pub fn cost_deviation_pct(planned: f64, actual: f64) -> f64 {
    (planned - actual) / actual * 100.0
}
