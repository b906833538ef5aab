//! Insertion-based HEFT list scheduling.

use crate::error::{Error, Result};
use crate::sched::cluster::ClusterSpec;
use crate::sched::dag::{topo_order, DagEdge, RuntimeSource, WorkflowDag};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slot {
    pub node: usize,
    pub start: f64,
    pub finish: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    /// Indexed by task.
    pub assignments: Vec<Slot>,
    /// Tasks in the order they were placed.
    pub sequence: Vec<usize>,
    pub makespan: f64,
}

impl Schedule {
    pub fn from_slots(assignments: Vec<Slot>, sequence: Vec<usize>) -> Self {
        let makespan = assignments.iter().map(|s| s.finish).fold(0.0, f64::max);
        Schedule {
            assignments,
            sequence,
            makespan,
        }
    }

    /// Tasks on `node` in start order.
    pub fn node_tasks(&self, node: usize) -> Vec<usize> {
        let pos = self.sequence_positions();
        let mut ts: Vec<usize> = (0..self.assignments.len())
            .filter(|&t| self.assignments[t].node == node)
            .collect();
        ts.sort_by(|&a, &b| {
            self.assignments[a]
                .start
                .total_cmp(&self.assignments[b].start)
                .then(pos[a].cmp(&pos[b]))
        });
        ts
    }

    pub(crate) fn sequence_positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.assignments.len()];
        for (i, &t) in self.sequence.iter().enumerate() {
            pos[t] = i;
        }
        pos
    }
}

/// Per-task neighbour lists of `(task, transfer_bytes)`.
pub(crate) type Adjacency = Vec<Vec<(usize, f64)>>;

pub(crate) fn adjacency(n: usize, edges: &[DagEdge]) -> (Adjacency, Adjacency) {
    let mut succ = vec![Vec::new(); n];
    let mut pred = vec![Vec::new(); n];
    for e in edges {
        succ[e.from].push((e.to, e.transfer_bytes));
        pred[e.to].push((e.from, e.transfer_bytes));
    }
    (succ, pred)
}

/// Upward ranks from mean node cost and mean pairwise communication cost.
pub fn upward_ranks(costs: &[Vec<f64>], edges: &[DagEdge], cluster: &ClusterSpec) -> Result<Vec<f64>> {
    let n = costs.len();
    let order = topo_order(n, edges)?;
    let (succ, _) = adjacency(n, edges);
    let mean_bw = cluster.mean_pair_bandwidth();
    let mean_comm = |bytes: f64| match mean_bw {
        Some(bw) if bytes > 0.0 => bytes * 8.0 / bw,
        _ => 0.0,
    };
    let mut rank = vec![0.0; n];
    for &i in order.iter().rev() {
        let w = costs[i].iter().sum::<f64>() / costs[i].len() as f64;
        let tail = succ[i]
            .iter()
            .map(|&(j, bytes)| mean_comm(bytes) + rank[j])
            .fold(0.0, f64::max);
        rank[i] = w + tail;
    }
    Ok(rank)
}

/// Scheduling order: descending upward rank, ties broken by topological
/// position so zero-cost predecessors still come first.
pub fn priority_order(costs: &[Vec<f64>], edges: &[DagEdge], cluster: &ClusterSpec) -> Result<Vec<usize>> {
    let rank = upward_ranks(costs, edges, cluster)?;
    let topo = topo_order(costs.len(), edges)?;
    let mut topo_pos = vec![0; costs.len()];
    for (p, &t) in topo.iter().enumerate() {
        topo_pos[t] = p;
    }
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|&a, &b| rank[b].total_cmp(&rank[a]).then(topo_pos[a].cmp(&topo_pos[b])));
    Ok(order)
}

/// Earliest start `>= ready` of a `duration`-long slot between the busy
/// intervals of one node (sorted by start).
fn insertion_start(busy: &[(f64, f64)], ready: f64, duration: f64) -> f64 {
    let mut candidate = ready;
    for &(s, f) in busy {
        if candidate + duration <= s {
            return candidate;
        }
        candidate = candidate.max(f);
    }
    candidate
}

/// HEFT over an explicit `[task][node]` cost table.
pub fn heft_with_costs(costs: &[Vec<f64>], edges: &[DagEdge], cluster: &ClusterSpec) -> Result<Schedule> {
    let n = costs.len();
    let nodes = cluster.len();
    if n > 0 && nodes == 0 {
        return Err(Error::Config("cluster has no nodes".into()));
    }
    let order = priority_order(costs, edges, cluster)?;
    let (_, pred) = adjacency(n, edges);
    let mut busy: Vec<Vec<(f64, f64)>> = vec![Vec::new(); nodes];
    let mut slots: Vec<Option<Slot>> = vec![None; n];

    for &t in &order {
        let mut best: Option<Slot> = None;
        for node in 0..nodes {
            let mut ready: f64 = 0.0;
            for &(p, bytes) in &pred[t] {
                let ps = slots[p].expect("rank order is topological");
                ready = ready.max(ps.finish + cluster.comm_time(ps.node, node, bytes));
            }
            let duration = costs[t][node];
            let start = insertion_start(&busy[node], ready, duration);
            let finish = start + duration;
            if best.is_none_or(|b| finish < b.finish) {
                best = Some(Slot { node, start, finish });
            }
        }
        let slot = best.expect("at least one node");
        let list = &mut busy[slot.node];
        let at = list.partition_point(|&(s, _)| s <= slot.start);
        list.insert(at, (slot.start, slot.finish));
        slots[t] = Some(slot);
    }

    Ok(Schedule::from_slots(
        slots.into_iter().map(|s| s.expect("every task placed")).collect(),
        order,
    ))
}

/// HEFT on `dag` using the runtimes from `source` for every node.
pub fn heft(dag: &WorkflowDag, cluster: &ClusterSpec, source: RuntimeSource<'_>) -> Result<Schedule> {
    let costs = dag.cost_matrix(&cluster.nodes, source)?;
    heft_with_costs(&costs, &dag.edges, cluster)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sched::cluster::reference_bandwidths;
    use crate::sched::validate::validate_schedule;
    use crate::trace::MachineId;

    fn cluster(n: usize) -> ClusterSpec {
        ClusterSpec::new(vec![MachineId::from("C2"); n], &reference_bandwidths(), 0)
    }

    fn edge(from: usize, to: usize) -> DagEdge {
        DagEdge { from, to, transfer_bytes: 0.0 }
    }

    #[test]
    fn single_task_goes_to_fastest_node() {
        let s = heft_with_costs(&[vec![10.0, 20.0]], &[], &cluster(2)).unwrap();
        assert_eq!(s.assignments[0].node, 0);
        assert_eq!(s.makespan, 10.0);
    }

    #[test]
    fn chain_on_homogeneous_nodes() {
        let costs = vec![vec![4.0, 4.0], vec![6.0, 6.0]];
        let s = heft_with_costs(&costs, &[edge(0, 1)], &cluster(2)).unwrap();
        assert_eq!(s.makespan, 10.0);
        validate_schedule(&s, &costs, &[edge(0, 1)], &cluster(2)).unwrap();
    }

    #[test]
    fn insertion_fills_gap() {
        assert_eq!(insertion_start(&[(0.0, 2.0), (5.0, 9.0)], 1.0, 3.0), 2.0);
        assert_eq!(insertion_start(&[(0.0, 2.0), (5.0, 9.0)], 1.0, 3.5), 9.0);
        assert_eq!(insertion_start(&[], 4.0, 1.0), 4.0);
        assert_eq!(insertion_start(&[(0.0, 2.0)], 0.0, 0.0), 0.0);
    }

    #[test]
    fn ranks_follow_definition() {
        // 0 -> 1, 0 -> 2; mean costs 3, 2, 5 on two identical nodes
        let costs = vec![vec![3.0, 3.0], vec![2.0, 2.0], vec![5.0, 5.0]];
        let edges = [edge(0, 1), edge(0, 2)];
        let r = upward_ranks(&costs, &edges, &cluster(2)).unwrap();
        assert_eq!(r, vec![8.0, 2.0, 5.0]);
        assert_eq!(priority_order(&costs, &edges, &cluster(2)).unwrap(), vec![0, 2, 1]);
    }

    #[test]
    fn zero_cost_tasks_keep_precedence() {
        let costs = vec![vec![0.0], vec![0.0], vec![1.0]];
        let edges = [edge(1, 0), edge(0, 2)];
        let s = heft_with_costs(&costs, &edges, &cluster(1)).unwrap();
        validate_schedule(&s, &costs, &edges, &cluster(1)).unwrap();
    }

    #[test]
    fn communication_delays_remote_successor() {
        // 1 GB over 1 Gbps = 8 s
        let c = ClusterSpec::new(vec!["A1".into(), "A1".into()], &reference_bandwidths(), 0);
        let costs = vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]];
        let edges = [
            DagEdge { from: 0, to: 1, transfer_bytes: 1e9 },
            DagEdge { from: 0, to: 2, transfer_bytes: 1e9 },
        ];
        let s = heft_with_costs(&costs, &edges, &c).unwrap();
        // remote would finish at 1 + 8 + 1, so both successors stay local
        assert_eq!(s.makespan, 3.0);
        validate_schedule(&s, &costs, &edges, &c).unwrap();
    }

    #[test]
    fn cycle_is_rejected() {
        let costs = vec![vec![1.0], vec![1.0]];
        assert!(heft_with_costs(&costs, &[edge(0, 1), edge(1, 0)], &cluster(1)).is_err());
    }
}
