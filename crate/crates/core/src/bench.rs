//! Machine microbenchmark profiles and per-task application benchmarks.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::trace::MachineId;

pub const PROFILE_HEADER: [&str; 6] = [
    "machine",
    "is_local",
    "cpu_events_per_s",
    "ram_score",
    "read_iops",
    "write_iops",
];
pub const APP_BENCH_HEADER: [&str; 3] = ["task", "machine", "value"];

/// Profiles of the six reference machines (local workstation, two commodity
/// cluster nodes and three cloud instance types).
pub const REFERENCE_PROFILES_CSV: &str = include_str!("../fixtures/reference_profiles.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct MachineProfile {
    pub machine: MachineId,
    pub cpu_events_per_s: f64,
    pub ram_score: f64,
    pub read_iops: f64,
    pub write_iops: f64,
}

impl MachineProfile {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("cpu_events_per_s", self.cpu_events_per_s),
            ("ram_score", self.ram_score),
            ("read_iops", self.read_iops),
            ("write_iops", self.write_iops),
        ];
        for (field, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::NonPositiveScore {
                    machine: self.machine.to_string(),
                    field: field.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// I/O score of a machine: the mean of its read and write IOPS.
pub fn io_score(p: &MachineProfile) -> f64 {
    0.5 * (p.read_iops + p.write_iops)
}

/// Task-specific benchmark score; higher means the machine runs the task faster.
#[derive(Debug, Clone, PartialEq)]
pub struct AppBenchmark {
    pub task: String,
    pub machine: MachineId,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRegistry {
    pub profiles: BTreeMap<MachineId, MachineProfile>,
    pub app_benchmarks: BTreeMap<(String, MachineId), AppBenchmark>,
    pub local: MachineId,
}

impl ProfileRegistry {
    pub fn reference() -> Self {
        read_profiles(REFERENCE_PROFILES_CSV.as_bytes(), "<reference profiles>")
            .expect("bundled profiles are valid")
    }

    pub fn local_profile(&self) -> &MachineProfile {
        &self.profiles[&self.local]
    }

    pub fn profile(&self, machine: &MachineId) -> Result<&MachineProfile> {
        self.profiles
            .get(machine)
            .ok_or_else(|| Error::UnknownMachine(machine.to_string()))
    }

    /// All machines except the local one, in name order.
    pub fn targets(&self) -> Vec<MachineId> {
        self.profiles
            .keys()
            .filter(|m| **m != self.local)
            .cloned()
            .collect()
    }

    pub fn app_benchmark(&self, task: &str, machine: &MachineId) -> Option<&AppBenchmark> {
        self.app_benchmarks.get(&(task.to_string(), machine.clone()))
    }

    /// Replaces every application benchmark value by its reciprocal, for
    /// inputs that record benchmark runtimes instead of scores.
    pub fn invert_app_benchmarks(&mut self) {
        for b in self.app_benchmarks.values_mut() {
            b.value = 1.0 / b.value;
        }
    }

    pub fn with_app_benchmarks(mut self, benches: Vec<AppBenchmark>) -> Result<Self> {
        for b in benches {
            if !self.profiles.contains_key(&b.machine) {
                return Err(Error::UnknownMachine(b.machine.to_string()));
            }
            let key = (b.task.clone(), b.machine.clone());
            if self.app_benchmarks.insert(key, b.clone()).is_some() {
                return Err(Error::DuplicateKey {
                    path: "<app benchmarks>".into(),
                    key: format!("({}, {})", b.task, b.machine),
                });
            }
        }
        Ok(self)
    }
}

fn header_index<const N: usize>(
    headers: &csv::StringRecord,
    names: [&str; N],
    path: &str,
) -> Result<[usize; N]> {
    let mut idx = [0usize; N];
    for (slot, name) in idx.iter_mut().zip(names) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_string(),
                name: name.to_string(),
            })?;
    }
    Ok(idx)
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "y" => Some(true),
        "false" | "0" | "no" | "n" | "" => Some(false),
        _ => None,
    }
}

pub fn read_profiles<R: Read>(reader: R, path: &str) -> Result<ProfileRegistry> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx = header_index(&headers, PROFILE_HEADER, path)?;
    let bad = |row: usize, col: usize, value: &str| Error::BadValue {
        path: path.to_string(),
        row,
        column: PROFILE_HEADER[col].to_string(),
        value: value.to_string(),
    };

    let mut profiles = BTreeMap::new();
    let mut local = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let get = |col: usize| rec.get(idx[col]).unwrap_or("").trim();
        let machine = MachineId::new(get(0)).map_err(|_| bad(row, 0, get(0)))?;
        let is_local = parse_bool(get(1)).ok_or_else(|| bad(row, 1, get(1)))?;
        let num = |col: usize| get(col).parse::<f64>().map_err(|_| bad(row, col, get(col)));
        let profile = MachineProfile {
            machine: machine.clone(),
            cpu_events_per_s: num(2)?,
            ram_score: num(3)?,
            read_iops: num(4)?,
            write_iops: num(5)?,
        };
        profile.validate()?;
        if is_local {
            if local.is_some() {
                return Err(Error::DuplicateKey {
                    path: path.to_string(),
                    key: "is_local".into(),
                });
            }
            local = Some(machine.clone());
        }
        if profiles.insert(machine.clone(), profile).is_some() {
            return Err(Error::DuplicateKey {
                path: path.to_string(),
                key: machine.to_string(),
            });
        }
    }
    let local = local.ok_or(Error::MissingLocal)?;
    Ok(ProfileRegistry {
        profiles,
        app_benchmarks: BTreeMap::new(),
        local,
    })
}

pub fn load_profiles(path: impl AsRef<Path>) -> Result<ProfileRegistry> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_profiles(file, &path.display().to_string())
}

pub fn read_app_benchmarks<R: Read>(reader: R, path: &str) -> Result<Vec<AppBenchmark>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx = header_index(&headers, APP_BENCH_HEADER, path)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |col: usize| rec.get(idx[col]).unwrap_or("").trim();
        let bad = |col: usize| Error::BadValue {
            path: path.to_string(),
            row: i + 1,
            column: APP_BENCH_HEADER[col].to_string(),
            value: get(col).to_string(),
        };
        if get(0).is_empty() {
            return Err(bad(0));
        }
        let machine = MachineId::new(get(1)).map_err(|_| bad(1))?;
        let value: f64 = get(2).parse().map_err(|_| bad(2))?;
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::NonPositiveScore {
                machine: machine.to_string(),
                field: format!("app benchmark `{}`", get(0)),
            });
        }
        out.push(AppBenchmark {
            task: get(0).to_string(),
            machine,
            value,
        });
    }
    Ok(out)
}

pub fn load_app_benchmarks(path: impl AsRef<Path>) -> Result<Vec<AppBenchmark>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_app_benchmarks(file, &path.display().to_string())
}

pub fn write_profiles<W: std::io::Write>(writer: W, reg: &ProfileRegistry) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(PROFILE_HEADER)?;
    for p in reg.profiles.values() {
        wtr.write_record([
            p.machine.to_string(),
            (p.machine == reg.local).to_string(),
            p.cpu_events_per_s.to_string(),
            p.ram_score.to_string(),
            p.read_iops.to_string(),
            p.write_iops.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<profile writer>", e))?;
    Ok(())
}

pub fn write_app_benchmarks<W: std::io::Write>(writer: W, benches: &[AppBenchmark]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(APP_BENCH_HEADER)?;
    for b in benches {
        wtr.write_record([b.task.clone(), b.machine.to_string(), format!("{:.6}", b.value)])?;
    }
    wtr.flush().map_err(|e| Error::io("<app benchmark writer>", e))?;
    Ok(())
}
