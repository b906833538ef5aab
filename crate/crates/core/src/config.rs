//! Flat `key = value` run configuration. `#` starts a comment; later keys
//! overwrite earlier ones, and command-line flags are applied on top.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::method::{parse_methods, Method};
use crate::sched::billing::Granularity;
use crate::trace::MachineId;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub training: Option<PathBuf>,
    pub evaluation: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub app_benchmarks: Option<PathBuf>,
    pub dag: Option<PathBuf>,
    /// Prediction CSV consumed by `evaluate`/`simulate` instead of refitting.
    pub predictions: Option<PathBuf>,
    pub methods: Vec<Method>,
    pub confidence: f64,
    pub seed: u64,
    pub clusters: usize,
    pub cluster_size: usize,
    /// Empty means both granularities.
    pub billing: Vec<Granularity>,
    pub out: PathBuf,
    pub invert_app_bench: bool,
    pub query_scale: f64,
    pub training_set: String,
    pub prices: BTreeMap<MachineId, f64>,
    pub bandwidths: BTreeMap<MachineId, f64>,
    pub pool: Option<Vec<MachineId>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            training: None,
            evaluation: None,
            profiles: None,
            app_benchmarks: None,
            dag: None,
            predictions: None,
            methods: Method::ALL.to_vec(),
            confidence: 0.95,
            seed: 0,
            clusters: 200,
            cluster_size: 20,
            billing: Vec::new(),
            out: PathBuf::from("out"),
            invert_app_bench: false,
            query_scale: 10.0,
            training_set: "0".into(),
            prices: BTreeMap::new(),
            bandwidths: BTreeMap::new(),
            pool: None,
        }
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("bad value `{value}` for `{key}`"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value))
}

fn positive(key: &str, value: &str) -> Result<f64> {
    let v: f64 = num(key, value)?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(bad(key, value))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if let Some(m) = key.strip_prefix("price.") {
            self.prices.insert(MachineId::new(m)?, num(key, value)?);
            return Ok(());
        }
        if let Some(m) = key.strip_prefix("bandwidth.") {
            // given in Gbps
            self.bandwidths
                .insert(MachineId::new(m)?, positive(key, value)? * crate::sched::cluster::GBPS);
            return Ok(());
        }
        match key {
            "training" => self.training = Some(value.into()),
            "evaluation" => self.evaluation = Some(value.into()),
            "profiles" => self.profiles = Some(value.into()),
            "app_benchmarks" => self.app_benchmarks = Some(value.into()),
            "dag" => self.dag = Some(value.into()),
            "predictions" => self.predictions = Some(value.into()),
            "methods" => self.methods = parse_methods(value)?,
            "confidence" => {
                let c: f64 = num(key, value)?;
                if !(c > 0.0 && c < 1.0) {
                    return Err(bad(key, value));
                }
                self.confidence = c;
            }
            "seed" => self.seed = num(key, value)?,
            "clusters" => self.clusters = num(key, value)?,
            "cluster_size" => self.cluster_size = num(key, value)?,
            "billing" => {
                self.billing = match value {
                    "" | "both" => Vec::new(),
                    v => vec![v.parse()?],
                }
            }
            "out" => self.out = value.into(),
            "invert_app_bench" => self.invert_app_bench = num(key, value)?,
            "query_scale" => self.query_scale = positive(key, value)?,
            "training_set" => self.training_set = value.to_string(),
            "pool" => {
                let pool = value
                    .split(',')
                    .map(|m| MachineId::new(m.trim()))
                    .collect::<Result<Vec<_>>>()?;
                self.pool = Some(pool);
            }
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Checks the cross-field invariants.
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if let (Some(t), Some(e)) = (&self.training, &self.evaluation) {
            if t == e {
                return Err(Error::Config("training and evaluation paths must differ".into()));
            }
        }
        if self.cluster_size == 0 {
            return Err(Error::Config("cluster_size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn granularities(&self) -> Vec<Granularity> {
        if self.billing.is_empty() {
            vec![Granularity::Hour, Granularity::Minute]
        } else {
            self.billing.clone()
        }
    }
}
