use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::trace::MachineId;

pub const GBPS: f64 = 1e9;
pub const DEFAULT_BANDWIDTH_BPS: f64 = GBPS;

/// Network bandwidth of the reference machines in bits per second.
pub fn reference_bandwidths() -> BTreeMap<MachineId, f64> {
    [
        ("Local", GBPS),
        ("A1", GBPS),
        ("A2", GBPS),
        ("N1", 16.0 * GBPS),
        ("N2", 16.0 * GBPS),
        ("C2", 16.0 * GBPS),
    ]
    .into_iter()
    .map(|(m, b)| (MachineId::from(m), b))
    .collect()
}

/// The cloud/cluster node types clusters are drawn from.
pub fn reference_pool() -> Vec<MachineId> {
    ["A1", "A2", "N1", "N2", "C2"].into_iter().map(MachineId::from).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSpec {
    pub nodes: Vec<MachineId>,
    /// Bits per second, parallel to `nodes`.
    pub bandwidth: Vec<f64>,
    pub seed: u64,
}

impl ClusterSpec {
    pub fn new(nodes: Vec<MachineId>, bandwidths: &BTreeMap<MachineId, f64>, seed: u64) -> Self {
        let bandwidth = nodes
            .iter()
            .map(|m| bandwidths.get(m).copied().unwrap_or(DEFAULT_BANDWIDTH_BPS))
            .collect();
        ClusterSpec { nodes, bandwidth, seed }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Seconds to move `bytes` from node `a` to node `b`: zero when
    /// co-located, otherwise limited by the slower of the two links.
    pub fn comm_time(&self, a: usize, b: usize, bytes: f64) -> f64 {
        if a == b || bytes == 0.0 {
            0.0
        } else {
            bytes * 8.0 / self.bandwidth[a].min(self.bandwidth[b])
        }
    }

    /// Mean link bandwidth over ordered pairs of distinct nodes.
    pub fn mean_pair_bandwidth(&self) -> Option<f64> {
        let n = self.len();
        if n < 2 {
            return None;
        }
        let mut sum = 0.0;
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    sum += self.bandwidth[a].min(self.bandwidth[b]);
                }
            }
        }
        Some(sum / (n * (n - 1)) as f64)
    }
}

/// Generator used for cluster `index` of a sweep seeded with `seed`.
pub fn cluster_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64))
}

/// Draws one cluster of `size` nodes uniformly and independently from `pool`.
pub fn draw_cluster(
    rng: &mut ChaCha8Rng,
    size: usize,
    pool: &[MachineId],
    bandwidths: &BTreeMap<MachineId, f64>,
    seed: u64,
) -> ClusterSpec {
    assert!(!pool.is_empty(), "machine pool must be nonempty");
    let nodes = (0..size).map(|_| pool[rng.random_range(0..pool.len())].clone()).collect();
    ClusterSpec::new(nodes, bandwidths, seed)
}

/// Cluster `i` is drawn from a ChaCha8 stream seeded with `seed + i`.
pub fn generate_clusters(
    count: usize,
    size: usize,
    pool: &[MachineId],
    seed: u64,
    bandwidths: &BTreeMap<MachineId, f64>,
) -> Vec<ClusterSpec> {
    (0..count)
        .map(|i| {
            let s = seed.wrapping_add(i as u64);
            draw_cluster(&mut cluster_rng(seed, i), size, pool, bandwidths, s)
        })
        .collect()
}
