use crate::error::Result;
use crate::sched::cluster::ClusterSpec;
use crate::sched::dag::{DagEdge, RuntimeSource, WorkflowDag};
use crate::sched::heft::{adjacency, Schedule, Slot};

/// Replays a planned schedule with different task durations, keeping the
/// task-to-node mapping and the order of tasks on each node.
pub fn replay_with_costs(
    planned: &Schedule,
    costs: &[Vec<f64>],
    edges: &[DagEdge],
    cluster: &ClusterSpec,
) -> Schedule {
    let n = planned.assignments.len();
    let pos = planned.sequence_positions();
    let mut order: Vec<usize> = (0..n).collect();
    // Planned start order respects both precedence and node order; the
    // placement sequence breaks ties between zero-length tasks.
    order.sort_by(|&a, &b| {
        planned.assignments[a]
            .start
            .total_cmp(&planned.assignments[b].start)
            .then(pos[a].cmp(&pos[b]))
    });
    let (_, pred) = adjacency(n, edges);
    let mut node_free = vec![0.0f64; cluster.len()];
    let mut slots: Vec<Option<Slot>> = vec![None; n];
    for &t in &order {
        let node = planned.assignments[t].node;
        let mut start = node_free[node];
        for &(p, bytes) in &pred[t] {
            let ps = slots[p].expect("predecessor replayed first");
            start = start.max(ps.finish + cluster.comm_time(ps.node, node, bytes));
        }
        let finish = start + costs[t][node];
        node_free[node] = finish;
        slots[t] = Some(Slot { node, start, finish });
    }
    Schedule::from_slots(
        slots.into_iter().map(|s| s.expect("every task replayed")).collect(),
        planned.sequence.clone(),
    )
}

/// Realized schedule when the plan meets the tasks' actual runtimes.
pub fn execute_with_actuals(planned: &Schedule, dag: &WorkflowDag, cluster: &ClusterSpec) -> Result<Schedule> {
    let costs = dag.cost_matrix(&cluster.nodes, RuntimeSource::Actual)?;
    Ok(replay_with_costs(planned, &costs, &dag.edges, cluster))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sched::cluster::reference_bandwidths;
    use crate::sched::heft::heft_with_costs;
    use crate::sched::validate::validate_schedule;
    use crate::trace::MachineId;

    fn cluster(names: &[&str]) -> ClusterSpec {
        ClusterSpec::new(names.iter().map(|&m| MachineId::from(m)).collect(), &reference_bandwidths(), 0)
    }

    #[test]
    fn identical_costs_reproduce_plan() {
        let c = cluster(&["A1", "C2"]);
        let costs = vec![vec![3.0, 2.0], vec![4.0, 1.0], vec![2.0, 2.0]];
        let edges = [DagEdge { from: 0, to: 2, transfer_bytes: 1e8 }];
        let plan = heft_with_costs(&costs, &edges, &c).unwrap();
        let real = replay_with_costs(&plan, &costs, &edges, &c);
        assert_eq!(plan, real);
    }

    #[test]
    fn uniform_overprediction_keeps_assignment() {
        let c = cluster(&["A1", "N1", "C2"]);
        let actual = vec![vec![9.0, 5.0, 4.0], vec![3.0, 2.0, 6.0], vec![7.0, 7.5, 8.0], vec![1.0, 2.0, 3.0]];
        let edges = [
            DagEdge { from: 0, to: 1, transfer_bytes: 0.0 },
            DagEdge { from: 0, to: 2, transfer_bytes: 0.0 },
            DagEdge { from: 1, to: 3, transfer_bytes: 0.0 },
            DagEdge { from: 2, to: 3, transfer_bytes: 0.0 },
        ];
        let doubled: Vec<Vec<f64>> = actual.iter().map(|r| r.iter().map(|x| 2.0 * x).collect()).collect();
        let plan_true = heft_with_costs(&actual, &edges, &c).unwrap();
        let plan_over = heft_with_costs(&doubled, &edges, &c).unwrap();
        let nodes = |s: &Schedule| s.assignments.iter().map(|a| a.node).collect::<Vec<_>>();
        assert_eq!(nodes(&plan_true), nodes(&plan_over));
        let real = replay_with_costs(&plan_over, &actual, &edges, &c);
        assert_eq!(real.makespan, plan_true.makespan);
        assert!((plan_over.makespan - 2.0 * real.makespan).abs() < 1e-12);
        validate_schedule(&real, &actual, &edges, &c).unwrap();
    }

    #[test]
    fn hand_traced_mixed_errors() {
        // Two A1 nodes (1 Gbps). a -> c carries 0.5 GB (4 s remote).
        // Plan with estimates a=4, b=4, c=2 on both nodes:
        //   ranks: a = 4 + 4 + 2 = 10, b = 4, c = 2 -> order a, b, c
        //   a: node0 [0,4]; b: node0 would finish 8, node1 finishes 4 -> node1 [0,4]
        //   c: node0 ready 4, finish 6; node1 ready 4+4, finish 10 -> node0 [4,6]
        // Actuals a=6, b=3, c=5:
        //   a node0 [0,6]; b node1 [0,3]; c node0 [6,11] -> makespan 11
        let c = cluster(&["A1", "A1"]);
        let est = vec![vec![4.0, 4.0], vec![4.0, 4.0], vec![2.0, 2.0]];
        let act = vec![vec![6.0, 6.0], vec![3.0, 3.0], vec![5.0, 5.0]];
        let edges = [DagEdge { from: 0, to: 2, transfer_bytes: 5e8 }];
        let plan = heft_with_costs(&est, &edges, &c).unwrap();
        assert_eq!(plan.sequence, vec![0, 1, 2]);
        assert_eq!(plan.assignments.iter().map(|s| s.node).collect::<Vec<_>>(), vec![0, 1, 0]);
        assert_eq!(plan.makespan, 6.0);
        let real = replay_with_costs(&plan, &act, &edges, &c);
        assert_eq!(real.assignments[0], Slot { node: 0, start: 0.0, finish: 6.0 });
        assert_eq!(real.assignments[1], Slot { node: 1, start: 0.0, finish: 3.0 });
        assert_eq!(real.assignments[2], Slot { node: 0, start: 6.0, finish: 11.0 });
        assert_eq!(real.makespan, 11.0);
    }
}
