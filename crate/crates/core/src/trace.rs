//! Task execution traces and their CSV form.
//!
//! A trace row is one observed execution of one task instance on one
//! machine. Runtimes are stored as integer milliseconds; everything
//! downstream works in float seconds.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 11] = [
    "workflow",
    "task",
    "instance_id",
    "machine",
    "input_size_uncompressed",
    "input_size_compressed",
    "runtime_ms",
    "io_read_bytes",
    "io_write_bytes",
    "cpu_pct",
    "peak_memory_bytes",
];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MachineId(String);

impl MachineId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(Error::Config("machine name must be nonempty".into()));
        }
        Ok(MachineId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for MachineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for MachineId {
    /// Panics on an empty name; use [`MachineId::new`] for untrusted input.
    fn from(s: &str) -> Self {
        MachineId::new(s).expect("nonempty machine name")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRun {
    pub workflow: String,
    pub task: String,
    pub instance_id: String,
    pub machine: MachineId,
    pub input_size_uncompressed: u64,
    pub input_size_compressed: Option<u64>,
    pub runtime_ms: u64,
    pub io_read: u64,
    pub io_write: u64,
    pub cpu_utilization: Option<f64>,
    pub peak_memory: Option<u64>,
}

impl TaskRun {
    pub fn runtime_secs(&self) -> f64 {
        self.runtime_ms as f64 / 1000.0
    }

    fn key(&self) -> (String, String, String, String) {
        (
            self.workflow.clone(),
            self.task.clone(),
            self.instance_id.clone(),
            self.machine.0.clone(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceLabel {
    Training,
    Evaluation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    pub runs: Vec<TaskRun>,
    pub label: TraceLabel,
}

impl TraceSet {
    /// Builds a trace set, enforcing key uniqueness and, for training
    /// traces, that every run comes from one machine.
    pub fn new(runs: Vec<TaskRun>, label: TraceLabel) -> Result<Self> {
        let mut seen = HashSet::with_capacity(runs.len());
        for run in &runs {
            if !seen.insert(run.key()) {
                let (w, t, i, m) = run.key();
                return Err(Error::DuplicateKey {
                    path: "<traces>".into(),
                    key: format!("({w}, {t}, {i}, {m})"),
                });
            }
        }
        if label == TraceLabel::Training {
            let machines: std::collections::BTreeSet<&str> =
                runs.iter().map(|r| r.machine.as_str()).collect();
            if machines.len() > 1 {
                let names: Vec<&str> = machines.into_iter().collect();
                return Err(Error::MixedMachines(names.join(", ")));
            }
        }
        Ok(TraceSet { runs, label })
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn machines(&self) -> Vec<MachineId> {
        let set: std::collections::BTreeSet<&MachineId> =
            self.runs.iter().map(|r| &r.machine).collect();
        set.into_iter().cloned().collect()
    }
}

fn column_index(headers: &csv::StringRecord, path: &str) -> Result<[usize; 11]> {
    let mut idx = [0usize; 11];
    for (slot, name) in idx.iter_mut().zip(TRACE_HEADER) {
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

struct RowReader<'a> {
    record: &'a csv::StringRecord,
    idx: &'a [usize; 11],
    path: &'a str,
    row: usize,
}

impl RowReader<'_> {
    fn raw(&self, col: usize) -> &str {
        self.record.get(self.idx[col]).unwrap_or("").trim()
    }

    fn bad(&self, col: usize) -> Error {
        Error::BadValue {
            path: self.path.to_string(),
            row: self.row,
            column: TRACE_HEADER[col].to_string(),
            value: self.raw(col).to_string(),
        }
    }

    fn ident(&self, col: usize) -> Result<String> {
        let v = self.raw(col);
        if v.is_empty() {
            return Err(self.bad(col));
        }
        Ok(v.to_string())
    }

    fn uint(&self, col: usize) -> Result<u64> {
        self.raw(col).parse::<u64>().map_err(|_| self.bad(col))
    }

    fn opt_uint(&self, col: usize) -> Result<Option<u64>> {
        if self.raw(col).is_empty() {
            Ok(None)
        } else {
            self.uint(col).map(Some)
        }
    }

    fn opt_float(&self, col: usize) -> Result<Option<f64>> {
        let v = self.raw(col);
        if v.is_empty() {
            return Ok(None);
        }
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() && x >= 0.0 => Ok(Some(x)),
            _ => Err(self.bad(col)),
        }
    }
}

/// Reads a trace CSV from any reader. `path` is only used in diagnostics.
pub fn read_trace_csv<R: Read>(reader: R, path: &str, label: TraceLabel) -> Result<TraceSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx = column_index(&headers, path)?;

    let mut runs = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = RowReader {
            record: &record,
            idx: &idx,
            path,
            row: i + 1,
        };
        let runtime_ms = row.uint(6)?;
        if runtime_ms == 0 {
            return Err(row.bad(6));
        }
        let run = TaskRun {
            workflow: row.ident(0)?,
            task: row.ident(1)?,
            instance_id: row.ident(2)?,
            machine: MachineId(row.ident(3)?),
            input_size_uncompressed: row.uint(4)?,
            input_size_compressed: row.opt_uint(5)?,
            runtime_ms,
            io_read: row.uint(7)?,
            io_write: row.uint(8)?,
            cpu_utilization: row.opt_float(9)?,
            peak_memory: row.opt_uint(10)?,
        };
        if !seen.insert(run.key()) {
            let (w, t, i, m) = run.key();
            return Err(Error::DuplicateKey {
                path: path.to_string(),
                key: format!("({w}, {t}, {i}, {m})"),
            });
        }
        runs.push(run);
    }
    if runs.is_empty() {
        return Err(Error::EmptyTrace { path: path.to_string() });
    }
    TraceSet::new(runs, label)
}

pub fn parse_trace_csv(path: impl AsRef<Path>, label: TraceLabel) -> Result<TraceSet> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_trace_csv(file, &path.display().to_string(), label)
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn write_trace_csv<W: Write>(writer: W, traces: &TraceSet) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(TRACE_HEADER)?;
    for r in &traces.runs {
        wtr.write_record([
            r.workflow.clone(),
            r.task.clone(),
            r.instance_id.clone(),
            r.machine.0.clone(),
            r.input_size_uncompressed.to_string(),
            opt(&r.input_size_compressed),
            r.runtime_ms.to_string(),
            r.io_read.to_string(),
            r.io_write.to_string(),
            opt(&r.cpu_utilization),
            opt(&r.peak_memory),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<trace writer>", e))?;
    Ok(())
}

/// Groups runs by abstract task name, lexicographically ordered.
pub fn group_by_task(traces: &TraceSet) -> BTreeMap<String, Vec<TaskRun>> {
    let mut groups: BTreeMap<String, Vec<TaskRun>> = BTreeMap::new();
    for run in &traces.runs {
        groups.entry(run.task.clone()).or_default().push(run.clone());
    }
    groups
}

/// Same as [`group_by_task`] but keyed by `(workflow, task)`, which is the
/// unit the prediction pipeline fits models for.
pub fn group_by_workflow_task(traces: &TraceSet) -> BTreeMap<(String, String), Vec<TaskRun>> {
    let mut groups: BTreeMap<(String, String), Vec<TaskRun>> = BTreeMap::new();
    for run in &traces.runs {
        groups
            .entry((run.workflow.clone(), run.task.clone()))
            .or_default()
            .push(run.clone());
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "workflow,task,instance_id,machine,input_size_uncompressed,input_size_compressed,runtime_ms,io_read_bytes,io_write_bytes,cpu_pct,peak_memory_bytes\n";

    fn parse(body: &str) -> Result<TraceSet> {
        read_trace_csv(format!("{HEADER}{body}").as_bytes(), "mem", TraceLabel::Evaluation)
    }

    fn run(task: &str, instance: &str) -> TaskRun {
        TaskRun {
            workflow: "wf".into(),
            task: task.into(),
            instance_id: instance.into(),
            machine: "Local".into(),
            input_size_uncompressed: 10,
            input_size_compressed: None,
            runtime_ms: 1000,
            io_read: 0,
            io_write: 0,
            cpu_utilization: None,
            peak_memory: None,
        }
    }

    #[test]
    fn single_row() {
        let t = parse("bacass,fastqc,1,Local,1000,500,1200,10,20,98.5,4096\n").unwrap();
        assert_eq!(t.runs.len(), 1);
        let r = &t.runs[0];
        assert_eq!(r.runtime_ms, 1200);
        assert_eq!(r.input_size_compressed, Some(500));
        assert_eq!(r.cpu_utilization, Some(98.5));
        assert!((r.runtime_secs() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn optional_columns_are_absent_not_zero() {
        let t = parse("w,t,1,Local,1000,,1200,0,0,,\n").unwrap();
        let r = &t.runs[0];
        assert_eq!(r.input_size_compressed, None);
        assert_eq!(r.cpu_utilization, None);
        assert_eq!(r.peak_memory, None);
        assert_eq!(r.io_read, 0);
    }

    #[test]
    fn negative_runtime_is_rejected() {
        let err = parse("w,t,1,Local,1000,,-5,0,0,,\n").unwrap_err();
        match err {
            Error::BadValue { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, "runtime_ms");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_runtime_and_negative_size_rejected() {
        assert!(matches!(
            parse("w,t,1,Local,1000,,0,0,0,,\n"),
            Err(Error::BadValue { .. })
        ));
        assert!(matches!(
            parse("w,t,1,Local,-1,,10,0,0,,\n"),
            Err(Error::BadValue { .. })
        ));
    }

    #[test]
    fn missing_column() {
        let csv = "workflow,task,instance_id,machine,runtime_ms\nw,t,1,L,5\n";
        let err = read_trace_csv(csv.as_bytes(), "mem", TraceLabel::Evaluation).unwrap_err();
        assert!(matches!(err, Error::MissingColumn { ref name, .. } if name == "input_size_uncompressed"));
    }

    #[test]
    fn duplicate_key() {
        let err = parse("w,t,1,Local,1,,10,0,0,,\nw,t,1,Local,2,,20,0,0,,\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateKey { .. }));
    }

    #[test]
    fn training_traces_must_be_single_machine() {
        let mut b = run("a", "1");
        b.machine = "A1".into();
        let err = TraceSet::new(vec![run("a", "0"), b], TraceLabel::Training).unwrap_err();
        assert!(matches!(err, Error::MixedMachines(_)));
    }

    #[test]
    fn fixture_round_trips() {
        let fixture = concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/fixtures/three_runs.csv"
        );
        let first = parse_trace_csv(fixture, TraceLabel::Training).unwrap();
        assert_eq!(first.runs.len(), 3);
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &first).unwrap();
        let second = read_trace_csv(buf.as_slice(), "mem", TraceLabel::Training).unwrap();
        assert_eq!(first, second);
        assert_eq!(buf, std::fs::read(fixture).unwrap());
    }

    #[test]
    fn grouping() {
        let empty = TraceSet::new(vec![], TraceLabel::Evaluation).unwrap();
        assert!(group_by_task(&empty).is_empty());

        let t = TraceSet::new(vec![run("a", "1"), run("b", "1"), run("a", "2")], TraceLabel::Evaluation)
            .unwrap();
        let g = group_by_task(&t);
        assert_eq!(g.len(), 2);
        assert_eq!(g["a"].len(), 2);
        assert_eq!(g["b"].len(), 1);
    }

    #[test]
    fn grouping_five_by_four() {
        let mut runs = Vec::new();
        for task in ["e", "c", "a", "d", "b"] {
            for i in 0..4 {
                runs.push(run(task, &i.to_string()));
            }
        }
        let g = group_by_task(&TraceSet::new(runs, TraceLabel::Evaluation).unwrap());
        let keys: Vec<&str> = g.keys().map(String::as_str).collect();
        assert_eq!(keys, ["a", "b", "c", "d", "e"]);
        assert!(g.values().all(|v| v.len() == 4));
    }

    fn arb_run() -> impl Strategy<Value = TaskRun> {
        (
            "[a-z]{1,6}",
            "[a-z]{1,6}",
            0u32..1000,
            prop_oneof![Just("Local"), Just("A1"), Just("N2")],
            0u64..u64::MAX / 2,
            proptest::option::of(0u64..1 << 40),
            1u64..1 << 40,
            (0u64..1 << 40, 0u64..1 << 40),
            proptest::option::of(0u32..80000),
            proptest::option::of(0u64..1 << 40),
        )
            .prop_map(|(w, t, i, m, d, dc, rt, (rd, wr), cpu, mem)| TaskRun {
                workflow: w,
                task: t,
                instance_id: i.to_string(),
                machine: m.into(),
                input_size_uncompressed: d,
                input_size_compressed: dc,
                runtime_ms: rt,
                io_read: rd,
                io_write: wr,
                cpu_utilization: cpu.map(|c| c as f64 / 100.0),
                peak_memory: mem,
            })
    }

    #[test]
    fn header_only_is_empty_trace() {
        let csv = format!("{}\n", TRACE_HEADER.join(","));
        let err = read_trace_csv(csv.as_bytes(), "t.csv", TraceLabel::Training).unwrap_err();
        assert!(matches!(err, Error::EmptyTrace { ref path } if path == "t.csv"));
    }

    proptest! {
        #[test]
        fn parse_serialize_parse_is_identity(runs in proptest::collection::vec(arb_run(), 1..20)) {
            let mut seen = HashSet::new();
            let runs: Vec<TaskRun> = runs.into_iter().filter(|r| seen.insert(r.key())).collect();
            let set = TraceSet::new(runs, TraceLabel::Evaluation).unwrap();
            let mut buf = Vec::new();
            write_trace_csv(&mut buf, &set).unwrap();
            let back = read_trace_csv(buf.as_slice(), "mem", TraceLabel::Evaluation).unwrap();
            prop_assert_eq!(&back, &set);
            let total: usize = group_by_task(&back).values().map(Vec::len).sum();
            prop_assert_eq!(total, set.runs.len());
        }
    }
}
