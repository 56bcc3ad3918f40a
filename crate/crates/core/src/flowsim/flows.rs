use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::topology::{Routing, Topology};
use crate::error::{Error, Result};
use crate::params::Phase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    Ring,
    RecursiveDoubling,
}

/// One point-to-point transfer within a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub src: usize,
    pub dst: usize,
    pub chunk_bytes: f64,
}

/// All transfers of one collective step and the topology they were planned for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSet {
    pub algorithm: Algorithm,
    pub phase: Phase,
    pub step_index: usize,
    pub flows: Vec<Flow>,
    pub required_topology: Topology,
}

impl FlowSet {
    pub fn n(&self) -> usize {
        self.required_topology.n()
    }

    /// Bytes sent by each node in this step, indexed by node.
    pub fn bytes_sent_per_node(&self) -> Vec<f64> {
        let mut sent = vec![0.0; self.n()];
        for f in &self.flows {
            sent[f.src] += f.chunk_bytes;
        }
        sent
    }
}

/// Number of steps in a phase of `algorithm` on `n` nodes.
pub fn step_count(algorithm: Algorithm, n: usize) -> usize {
    match algorithm {
        Algorithm::Ring => n.saturating_sub(1),
        Algorithm::RecursiveDoubling => n.trailing_zeros() as usize,
    }
}

/// Traffic of one step.
///
/// Ring: every node sends `m / n` bytes to its clockwise neighbour.
/// Recursive Doubling reduce-scatter step `i`: node `j` exchanges
/// `m / 2^(i+1)` bytes with `j XOR 2^i`. AllGather replays reduce-scatter
/// backwards: step `i` pairs `j` with `j XOR 2^(log2 n - 1 - i)` and
/// exchanges `m * 2^i / n` bytes.
pub fn build_step_flows(
    algorithm: Algorithm,
    phase: Phase,
    step: usize,
    n: usize,
    m_bytes: u64,
) -> Result<FlowSet> {
    if n < 2 {
        return Err(Error::InvalidParam {
            name: "n",
            reason: format!("need n >= 2, got {n}"),
        });
    }
    if algorithm == Algorithm::RecursiveDoubling && !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let steps = step_count(algorithm, n);
    if step >= steps {
        return Err(Error::StepOutOfRange { step, steps });
    }
    let m = m_bytes as f64;

    let (flows, required_topology) = match algorithm {
        Algorithm::Ring => {
            let chunk_bytes = m / n as f64;
            let flows = (0..n)
                .map(|j| Flow {
                    src: j,
                    dst: (j + 1) % n,
                    chunk_bytes,
                })
                .collect();
            (flows, Topology::StaticRing { n })
        }
        Algorithm::RecursiveDoubling => {
            let (distance, chunk_bytes) = match phase {
                Phase::ReduceScatter => (1usize << step, m / (1u64 << (step + 1)) as f64),
                Phase::AllGather => (
                    1usize << (steps - 1 - step),
                    m * (1u64 << step) as f64 / n as f64,
                ),
            };
            let flows = (0..n)
                .map(|j| Flow {
                    src: j,
                    dst: j ^ distance,
                    chunk_bytes,
                })
                .collect();
            let pairs = (0..n)
                .filter(|j| j & distance == 0)
                .map(|j| (j, j ^ distance))
                .collect();
            (flows, Topology::matching(n, pairs)?)
        }
    };

    Ok(FlowSet {
        algorithm,
        phase,
        step_index: step,
        flows,
        required_topology,
    })
}

/// Routes every flow of `fs` over `topo` and counts per-link occupancy.
pub fn route_and_load(fs: &FlowSet, topo: &Topology) -> Result<Routing> {
    let n = topo.n();
    let partners = topo.partners();
    let mut paths = Vec::with_capacity(fs.flows.len());
    let mut dense = vec![0u32; 2 * n];
    for f in &fs.flows {
        let path = topo.route_with(f.src, f.dst, partners.as_deref())?;
        for link in &path {
            dense[topo.link_index(link)] += 1;
        }
        paths.push(path);
    }
    let path_loads = paths
        .iter()
        .map(|p| {
            p.iter()
                .map(|l| dense[topo.link_index(l)])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut loads = BTreeMap::new();
    for path in &paths {
        for link in path {
            loads.entry(*link).or_insert(dense[topo.link_index(link)]);
        }
    }
    Ok(Routing {
        paths,
        loads,
        path_loads,
    })
}
