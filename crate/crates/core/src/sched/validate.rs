use crate::sched::cluster::ClusterSpec;
use crate::sched::dag::DagEdge;
use crate::sched::heft::{adjacency, Schedule};

/// Absolute slack allowed when comparing float timestamps.
const EPS: f64 = 1e-9;

/// Checks a schedule against its cost table: durations match, no two tasks
/// overlap on a node, and every task starts after its inputs have arrived.
pub fn validate_schedule(
    sched: &Schedule,
    costs: &[Vec<f64>],
    edges: &[DagEdge],
    cluster: &ClusterSpec,
) -> Result<(), String> {
    let n = costs.len();
    if sched.assignments.len() != n {
        return Err(format!("{} slots for {} tasks", sched.assignments.len(), n));
    }
    for (t, s) in sched.assignments.iter().enumerate() {
        if s.node >= cluster.len() {
            return Err(format!("task {t} on missing node {}", s.node));
        }
        if s.start < -EPS {
            return Err(format!("task {t} starts before 0"));
        }
        let expected = costs[t][s.node];
        if (s.finish - s.start - expected).abs() > EPS * expected.max(1.0) {
            return Err(format!("task {t} runs {} instead of {expected}", s.finish - s.start));
        }
    }
    for node in 0..cluster.len() {
        // zero-length tasks may sit on another task's boundary
        let tasks = sched.node_tasks(node);
        for (i, &ta) in tasks.iter().enumerate() {
            for &tb in &tasks[i + 1..] {
                let (a, b) = (sched.assignments[ta], sched.assignments[tb]);
                if a.finish.min(b.finish) - a.start.max(b.start) > EPS {
                    return Err(format!("tasks {ta} and {tb} overlap on node {node}"));
                }
            }
        }
    }
    let (_, pred) = adjacency(n, edges);
    for t in 0..n {
        let s = sched.assignments[t];
        for &(p, bytes) in &pred[t] {
            let ps = sched.assignments[p];
            let arrival = ps.finish + cluster.comm_time(ps.node, s.node, bytes);
            if s.start + EPS * arrival.max(1.0) < arrival {
                return Err(format!("task {t} starts at {} before input from {p} arrives at {arrival}", s.start));
            }
        }
    }
    let makespan = sched.assignments.iter().map(|s| s.finish).fold(0.0, f64::max);
    if (makespan - sched.makespan).abs() > EPS * makespan.max(1.0) {
        return Err(format!("makespan {} but last finish {makespan}", sched.makespan));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sched::cluster::reference_bandwidths;
    use crate::sched::heft::Slot;

    fn slot(node: usize, start: f64, finish: f64) -> Slot {
        Slot { node, start, finish }
    }

    fn cluster() -> ClusterSpec {
        ClusterSpec::new(vec!["A1".into(), "A1".into()], &reference_bandwidths(), 0)
    }

    #[test]
    fn catches_each_violation() {
        let costs = vec![vec![2.0, 2.0], vec![3.0, 3.0]];
        let edge = [DagEdge { from: 0, to: 1, transfer_bytes: 1e9 }];
        let ok = Schedule::from_slots(vec![slot(0, 0.0, 2.0), slot(0, 2.0, 5.0)], vec![0, 1]);
        validate_schedule(&ok, &costs, &edge, &cluster()).unwrap();

        let overlap = Schedule::from_slots(vec![slot(0, 0.0, 2.0), slot(0, 1.0, 4.0)], vec![0, 1]);
        assert!(validate_schedule(&overlap, &costs, &[], &cluster()).unwrap_err().contains("overlap"));

        // remote successor must wait 8 s for 1 GB over 1 Gbps
        let early = Schedule::from_slots(vec![slot(0, 0.0, 2.0), slot(1, 2.0, 5.0)], vec![0, 1]);
        assert!(validate_schedule(&early, &costs, &edge, &cluster()).unwrap_err().contains("before input"));

        let wrong = Schedule::from_slots(vec![slot(0, 0.0, 1.0), slot(1, 0.0, 3.0)], vec![0, 1]);
        assert!(validate_schedule(&wrong, &costs, &[], &cluster()).unwrap_err().contains("runs"));
    }

    #[test]
    fn zero_length_on_boundary_is_fine() {
        let costs = vec![vec![5.0, 5.0], vec![0.0, 0.0]];
        let s = Schedule::from_slots(vec![slot(0, 0.0, 5.0), slot(0, 0.0, 0.0)], vec![0, 1]);
        validate_schedule(&s, &costs, &[], &cluster()).unwrap();
    }
}
