use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::trace::MachineId;

pub const EDGE_HEADER: [&str; 4] = ["workflow", "from_task", "to_task", "transfer_bytes"];

/// Per-machine-type runtimes of one task, in seconds.
pub type RuntimeTable = BTreeMap<MachineId, f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct DagTask {
    pub workflow: String,
    pub name: String,
    pub actual: RuntimeTable,
    /// Estimates keyed by method name.
    pub estimates: BTreeMap<String, RuntimeTable>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DagEdge {
    pub from: usize,
    pub to: usize,
    pub transfer_bytes: f64,
}

/// Precedence graph over task instances. Entry and exit are implicit: every
/// task without predecessors hangs off a zero-cost entry, every task without
/// successors feeds a zero-cost exit, and neither costs time or transfer.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WorkflowDag {
    pub tasks: Vec<DagTask>,
    pub edges: Vec<DagEdge>,
}

impl WorkflowDag {
    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn index_of(&self, workflow: &str, name: &str) -> Option<usize> {
        self.tasks
            .iter()
            .position(|t| t.workflow == workflow && t.name == name)
    }

    /// Kahn order, smallest index first among ready tasks.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        topo_order(self.tasks.len(), &self.edges)
    }

    /// Disjoint union of several workflows, as co-scheduled under one
    /// shared entry/exit pair.
    pub fn merge(dags: &[&WorkflowDag]) -> WorkflowDag {
        let mut out = WorkflowDag::default();
        for d in dags {
            let offset = out.tasks.len();
            out.tasks.extend(d.tasks.iter().cloned());
            out.edges.extend(d.edges.iter().map(|e| DagEdge {
                from: e.from + offset,
                to: e.to + offset,
                transfer_bytes: e.transfer_bytes,
            }));
        }
        out
    }

    /// Cost table `[task][node]` for the given runtime source.
    pub fn cost_matrix(&self, nodes: &[MachineId], source: RuntimeSource<'_>) -> Result<Vec<Vec<f64>>> {
        self.tasks
            .iter()
            .map(|t| {
                let table = match source {
                    RuntimeSource::Actual => Some(&t.actual),
                    RuntimeSource::Estimate(method) => t.estimates.get(method),
                };
                nodes
                    .iter()
                    .map(|m| {
                        table.and_then(|tb| tb.get(m)).copied().ok_or_else(|| Error::MissingEstimate {
                            task: format!("{}/{}", t.workflow, t.name),
                            machine: m.to_string(),
                        })
                    })
                    .collect()
            })
            .collect()
    }
}

pub(crate) fn topo_order(n: usize, edges: &[DagEdge]) -> Result<Vec<usize>> {
    let mut indeg = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for e in edges {
        if e.from >= n || e.to >= n {
            return Err(Error::InvalidDag(format!("edge {}->{} out of range", e.from, e.to)));
        }
        indeg[e.to] += 1;
        succ[e.from].push(e.to);
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &j in &succ[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                ready.insert(j);
            }
        }
    }
    if order.len() != n {
        return Err(Error::InvalidDag("cycle detected".into()));
    }
    Ok(order)
}

#[derive(Debug, Clone, Copy)]
pub enum RuntimeSource<'a> {
    Actual,
    Estimate(&'a str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRow {
    pub workflow: String,
    pub from_task: String,
    pub to_task: String,
    /// `None` when the column is empty: fall back to the producer's output size.
    pub transfer_bytes: Option<u64>,
}

pub fn read_edges<R: Read>(reader: R, path: &str) -> Result<Vec<EdgeRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 4];
    for (slot, name) in idx.iter_mut().zip(EDGE_HEADER) {
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
            column: EDGE_HEADER[c].to_string(),
            value: get(c).to_string(),
        };
        for c in 0..3 {
            if get(c).is_empty() {
                return Err(bad(c));
            }
        }
        let transfer_bytes = if get(3).is_empty() {
            None
        } else {
            Some(get(3).parse::<u64>().map_err(|_| bad(3))?)
        };
        out.push(EdgeRow {
            workflow: get(0).to_string(),
            from_task: get(1).to_string(),
            to_task: get(2).to_string(),
            transfer_bytes,
        });
    }
    Ok(out)
}

pub fn load_edges(path: impl AsRef<Path>) -> Result<Vec<EdgeRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_edges(file, &path.display().to_string())
}

pub fn write_edges<W: std::io::Write>(w: W, edges: &[EdgeRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(EDGE_HEADER)?;
    for e in edges {
        wtr.write_record([
            e.workflow.clone(),
            e.from_task.clone(),
            e.to_task.clone(),
            e.transfer_bytes.map(|b| b.to_string()).unwrap_or_default(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<edge writer>", e))?;
    Ok(())
}

/// Builds one DAG per workflow from task tables and edge rows.
/// `output_bytes` supplies transfer sizes for edges that leave them empty.
pub fn build_workflow_dags(
    tasks: Vec<DagTask>,
    edges: &[EdgeRow],
    output_bytes: &HashMap<(String, String), u64>,
) -> Result<BTreeMap<String, WorkflowDag>> {
    let mut dags: BTreeMap<String, WorkflowDag> = BTreeMap::new();
    for t in tasks {
        dags.entry(t.workflow.clone()).or_default().tasks.push(t);
    }
    for e in edges {
        let dag = dags
            .get_mut(&e.workflow)
            .ok_or_else(|| Error::InvalidDag(format!("edge refers to unknown workflow `{}`", e.workflow)))?;
        let find = |name: &str| {
            dag.index_of(&e.workflow, name)
                .ok_or_else(|| Error::InvalidDag(format!("unknown task `{}/{}`", e.workflow, name)))
        };
        let (from, to) = (find(&e.from_task)?, find(&e.to_task)?);
        let bytes = e.transfer_bytes.unwrap_or_else(|| {
            output_bytes
                .get(&(e.workflow.clone(), e.from_task.clone()))
                .copied()
                .unwrap_or(0)
        });
        dag.edges.push(DagEdge {
            from,
            to,
            transfer_bytes: bytes as f64,
        });
    }
    for dag in dags.values() {
        dag.topological_order()?;
    }
    Ok(dags)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(name: &str) -> DagTask {
        DagTask {
            workflow: "w".into(),
            name: name.into(),
            actual: BTreeMap::new(),
            estimates: BTreeMap::new(),
        }
    }

    #[test]
    fn topo_and_cycles() {
        let mut d = WorkflowDag {
            tasks: vec![task("a"), task("b"), task("c")],
            edges: vec![
                DagEdge { from: 2, to: 0, transfer_bytes: 0.0 },
                DagEdge { from: 0, to: 1, transfer_bytes: 0.0 },
            ],
        };
        assert_eq!(d.topological_order().unwrap(), vec![2, 0, 1]);
        d.edges.push(DagEdge { from: 1, to: 2, transfer_bytes: 0.0 });
        assert!(matches!(d.topological_order(), Err(Error::InvalidDag(_))));
    }

    #[test]
    fn merge_offsets_edges() {
        let d = WorkflowDag {
            tasks: vec![task("a"), task("b")],
            edges: vec![DagEdge { from: 0, to: 1, transfer_bytes: 5.0 }],
        };
        let m = WorkflowDag::merge(&[&d, &d]);
        assert_eq!(m.len(), 4);
        assert_eq!(m.edges[1], DagEdge { from: 2, to: 3, transfer_bytes: 5.0 });
    }

    #[test]
    fn edges_csv_and_fallback_transfer() {
        let csv = "workflow,from_task,to_task,transfer_bytes\nw,a,b,\nw,b,c,100\n";
        let rows = read_edges(csv.as_bytes(), "m").unwrap();
        assert_eq!(rows[0].transfer_bytes, None);
        let mut out = HashMap::new();
        out.insert(("w".to_string(), "a".to_string()), 42u64);
        let dags = build_workflow_dags(vec![task("a"), task("b"), task("c")], &rows, &out).unwrap();
        let d = &dags["w"];
        assert_eq!(d.edges[0].transfer_bytes, 42.0);
        assert_eq!(d.edges[1].transfer_bytes, 100.0);

        let bad = vec![EdgeRow { workflow: "w".into(), from_task: "a".into(), to_task: "zz".into(), transfer_bytes: None }];
        assert!(build_workflow_dags(vec![task("a")], &bad, &out).is_err());
    }

    #[test]
    fn missing_estimate() {
        let d = WorkflowDag { tasks: vec![task("a")], edges: vec![] };
        let err = d.cost_matrix(&["A1".into()], RuntimeSource::Estimate("naive")).unwrap_err();
        assert!(matches!(err, Error::MissingEstimate { .. }));
    }
}
