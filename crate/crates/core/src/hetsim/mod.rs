//! Model-driven simulation of the per-step host/accelerator cycle.
//!
//! Every node runs the same cycle each step: host and device evaluate their
//! kernels concurrently, the host ships the shared-face traces across the
//! link and back, the node exchanges faces with its neighbouring nodes, and
//! all nodes meet at a barrier. Device-resident state is copied back once
//! after the last step. Costs come from a [`KernelTimeTable`], so the
//! simulation is exact and deterministic.

mod compare;
mod scenario;
mod validate;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::mesh::Mesh;
use crate::partition::NestedPartition;
use crate::perfmodel::{element_bytes, face_bytes, Device, KernelTimeTable, KernelTimes, TransferModel};
use crate::Result;

pub use compare::{compare_strategies, simulate_strategy, Comparison, Strategy, StrategyResult};
pub use scenario::{NodeModel, PartitionSpec, ScenarioFile, SimScenario};
pub use validate::{compare_with_model, validate_model, KernelDiff, ModelValidation, NodeCheck};

/// Work placed on one node for one step.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeWork {
    pub k_host: usize,
    /// Elements the device computes on, or `None` when it sits idle.
    pub k_dev: Option<usize>,
    pub host_kernels: KernelTimes,
    pub dev_kernels: KernelTimes,
    /// Bytes per direction of the per-step host–device exchange, or `None`
    /// when host and device never synchronize.
    pub hd_bytes_each_way: Option<f64>,
    /// Elements whose state lives on the device and is copied back once.
    pub resident: usize,
}

impl NodeWork {
    /// The nested split: device kernels on `k_dev` elements, host kernels on
    /// the rest, and the `shared_faces` traces exchanged each way.
    pub fn nested(table: &KernelTimeTable, order: usize, k_host: usize, k_dev: usize, shared_faces: usize) -> Result<Self> {
        let host_kernels = table.kernel_times(order, Device::Host, k_host)?;
        if k_dev == 0 {
            return Ok(Self {
                k_host,
                k_dev: None,
                host_kernels,
                dev_kernels: KernelTimes::default(),
                hd_bytes_each_way: None,
                resident: 0,
            });
        }
        Ok(Self {
            k_host,
            k_dev: Some(k_dev),
            host_kernels,
            dev_kernels: table.kernel_times(order, Device::Device, k_dev)?,
            hd_bytes_each_way: Some(shared_faces as f64 * face_bytes(order)),
            resident: k_dev,
        })
    }
}

/// Simulated costs of one node in one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeStep {
    pub node: usize,
    pub k_host: usize,
    pub k_dev: usize,
    pub host_kernels: KernelTimes,
    pub dev_kernels: KernelTimes,
    /// Host–device exchange time (both directions), charged to the host.
    pub pci: f64,
    pub host_busy: f64,
    pub dev_busy: f64,
    /// Time the faster side waits at the host–device synchronization.
    pub sync_wait: f64,
    pub hd_bytes: f64,
    pub net_time: f64,
    pub net_bytes: f64,
    pub device_used: bool,
}

impl NodeStep {
    /// Length of the concurrent compute-and-exchange phase.
    pub fn compute_phase(&self) -> f64 {
        self.host_busy.max(self.dev_busy)
    }
}

/// Cost the node's step from its work, link and network share.
pub fn simulate_node(node: usize, work: &NodeWork, transfer: &TransferModel, net: (f64, f64)) -> NodeStep {
    let host_compute = work.host_kernels.total();
    let (pci, hd_bytes) = match work.hd_bytes_each_way {
        Some(bytes) => (2.0 * transfer.message_time(bytes), 2.0 * bytes),
        None => (0.0, 0.0),
    };
    let host_busy = host_compute + pci;
    let device_used = work.k_dev.is_some();
    let dev_busy = if device_used { work.dev_kernels.total() } else { 0.0 };
    let sync_wait = if work.hd_bytes_each_way.is_some() { (host_busy - dev_busy).abs() } else { 0.0 };
    NodeStep {
        node,
        k_host: work.k_host,
        k_dev: work.k_dev.unwrap_or(0),
        host_kernels: work.host_kernels,
        dev_kernels: work.dev_kernels,
        pci,
        host_busy,
        dev_busy,
        sync_wait,
        hd_bytes,
        net_time: net.0,
        net_bytes: net.1,
        device_used,
    }
}

/// Faces between each pair of distinct nodes, keyed `(min, max)`.
pub fn node_face_counts(mesh: &Mesh, partition: &NestedPartition) -> BTreeMap<(usize, usize), usize> {
    let mut counts = BTreeMap::new();
    for e in 0..mesh.len() {
        let a = partition.node.node_of(e);
        for nb in mesh.neighbors(e).iter().filter_map(|n| n.element()) {
            let b = partition.node.node_of(nb);
            if a < b {
                *counts.entry((a, b)).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Per-node network time and bytes: one aggregated message to and one from
/// every neighbouring node, serialized.
pub fn network_costs(mesh: &Mesh, partition: &NestedPartition, order: usize, link: &TransferModel) -> Vec<(f64, f64)> {
    let mut costs = vec![(0.0, 0.0); partition.node_count()];
    for (&(a, b), &faces) in &node_face_counts(mesh, partition) {
        let bytes = faces as f64 * face_bytes(order);
        for n in [a, b] {
            costs[n].0 += 2.0 * link.message_time(bytes);
            costs[n].1 += 2.0 * bytes;
        }
    }
    costs
}

/// Per-node, per-step record. Every step of the model costs the same, so the
/// trace stores one record per node and `steps` says how often it repeats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub order: usize,
    pub steps: usize,
    pub nodes: Vec<NodeStep>,
    /// Barrier-to-barrier wall time of one step.
    pub step_time: f64,
    pub bulk_bytes: f64,
    pub bulk_time: f64,
    pub total_time: f64,
}

impl SimTrace {
    pub fn from_nodes(order: usize, steps: usize, nodes: Vec<NodeStep>, bulk: &[(f64, f64)]) -> Self {
        let step_time = nodes.iter().map(|n| n.compute_phase() + n.net_time).fold(0.0, f64::max);
        let bulk_time = bulk.iter().map(|b| b.0).fold(0.0, f64::max);
        let bulk_bytes = bulk.iter().map(|b| b.1).sum();
        Self { order, steps, nodes, step_time, bulk_bytes, bulk_time, total_time: steps as f64 * step_time + bulk_time }
    }

    /// Elements processed per step by hosts and devices together.
    pub fn elements_per_step(&self) -> usize {
        self.nodes.iter().map(|n| n.k_host + n.k_dev).sum()
    }

    pub fn hd_bytes_per_step(&self) -> f64 {
        self.nodes.iter().map(|n| n.hd_bytes).sum()
    }

    pub fn net_bytes_per_step(&self) -> f64 {
        self.nodes.iter().map(|n| n.net_bytes).sum()
    }

    /// Mean fraction of each step the hosts spend not busy.
    pub fn host_idle_fraction(&self) -> f64 {
        self.idle(|n| n.host_busy)
    }

    /// Mean fraction of each step the devices spend not busy; an unused
    /// device counts as fully idle.
    pub fn device_idle_fraction(&self) -> f64 {
        self.idle(|n| n.dev_busy)
    }

    /// Mean of the host and device idle fractions.
    pub fn idle_fraction(&self) -> f64 {
        0.5 * (self.host_idle_fraction() + self.device_idle_fraction())
    }

    fn idle(&self, busy: impl Fn(&NodeStep) -> f64) -> f64 {
        if self.nodes.is_empty() || self.step_time <= 0.0 {
            return 0.0;
        }
        self.nodes.iter().map(|n| 1.0 - busy(n) / self.step_time).sum::<f64>() / self.nodes.len() as f64
    }

    /// `step,node,host_busy_s,dev_busy_s,sync_wait_s,hd_bytes,net_bytes`, one
    /// row per step and node.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,node,host_busy_s,dev_busy_s,sync_wait_s,hd_bytes,net_bytes\n");
        for step in 0..self.steps {
            for n in &self.nodes {
                let _ = writeln!(
                    out,
                    "{step},{},{:e},{:e},{:e},{},{}",
                    n.node, n.host_busy, n.dev_busy, n.sync_wait, n.hd_bytes, n.net_bytes
                );
            }
        }
        out
    }
}

/// Device–host shared faces of every prefix of `order` (a device set grown
/// one element at a time inside a single node): entry `k` is the count for
/// the first `k` elements. Faces to elements outside the node's `range` or
/// on the domain boundary are not shared.
pub fn prefix_shared_faces(mesh: &Mesh, range: &std::ops::Range<usize>, order: &[usize]) -> Vec<usize> {
    let mut on_device = vec![false; mesh.len()];
    let mut counts = Vec::with_capacity(order.len() + 1);
    let mut shared = 0usize;
    counts.push(0);
    for &e in order {
        for nb in mesh.neighbors(e).iter().filter_map(|n| n.element()).filter(|o| range.contains(o)) {
            if on_device[nb] {
                shared -= 1;
            } else {
                shared += 1;
            }
        }
        on_device[e] = true;
        counts.push(shared);
    }
    counts
}

/// Simulate the scenario's own nested partition.
pub fn simulate(scenario: &SimScenario) -> Result<SimTrace> {
    simulate_strategy(scenario, Strategy::Nested)
}

/// Final copy of device-resident state: `resident · (N+1)³ · 12 · 8` bytes
/// over the node's link, skipped when nothing is resident.
pub(crate) fn bulk_transfer(resident: usize, order: usize, link: &TransferModel) -> (f64, f64) {
    if resident == 0 {
        return (0.0, 0.0);
    }
    let bytes = resident as f64 * element_bytes(order);
    (link.message_time(bytes), bytes)
}
