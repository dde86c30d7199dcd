use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{bulk_transfer, network_costs, simulate_node, NodeWork, SimScenario, SimTrace};
use crate::error::{Error, Result};
use crate::perfmodel::{element_bytes, Device, Kernel, KernelTimes};

/// Ways of using each node's accelerator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Host only; the accelerator is unused.
    OffloadNone,
    /// Every element's volume kernel runs on the device, with the whole
    /// volume state shipped over and back every step.
    OffloadAllVolumeLoop,
    /// The scenario's nested partition: device-resident interior elements,
    /// shared faces exchanged each step.
    Nested,
    /// Everything on the device, talking to the network directly through a
    /// slowed-down path (`native_mic_penalty` times the link cost).
    /// Illustrative only.
    NativeMic,
}

impl Strategy {
    pub const ALL: [Strategy; 4] =
        [Strategy::OffloadNone, Strategy::OffloadAllVolumeLoop, Strategy::Nested, Strategy::NativeMic];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::OffloadNone => "offload_none",
            Strategy::OffloadAllVolumeLoop => "offload_all_volume_loop",
            Strategy::Nested => "nested",
            Strategy::NativeMic => "native_mic",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy `{s}`")))
    }
}

fn node_work(scenario: &SimScenario, node: usize, strategy: Strategy) -> Result<NodeWork> {
    let order = scenario.order;
    let table = &scenario.nodes[node].table;
    let p = &scenario.partition;
    let k = p.node.ranges[node].len();
    Ok(match strategy {
        Strategy::Nested => {
            NodeWork::nested(table, order, p.host_sets[node].len(), p.device_sets[node].len(), p.shared_faces[node].len())?
        }
        Strategy::OffloadNone => NodeWork::nested(table, order, k, 0, 0)?,
        Strategy::OffloadAllVolumeLoop => {
            let mut host_kernels = table.kernel_times(order, Device::Host, k)?;
            host_kernels[Kernel::VolumeLoop] = 0.0;
            let mut dev_kernels = KernelTimes::default();
            dev_kernels[Kernel::VolumeLoop] = table.entry(Kernel::VolumeLoop, order, Device::Device)?.eval(k as f64);
            NodeWork {
                k_host: k,
                k_dev: Some(0),
                host_kernels,
                dev_kernels,
                hd_bytes_each_way: Some(k as f64 * element_bytes(order)),
                resident: 0,
            }
        }
        Strategy::NativeMic => NodeWork {
            k_host: 0,
            k_dev: Some(k),
            host_kernels: KernelTimes::default(),
            dev_kernels: table.kernel_times(order, Device::Device, k)?,
            hd_bytes_each_way: None,
            resident: k,
        },
    })
}

/// Simulate `scenario` with every node following `strategy`.
pub fn simulate_strategy(scenario: &SimScenario, strategy: Strategy) -> Result<SimTrace> {
    let net = network_costs(&scenario.mesh, &scenario.partition, scenario.order, &scenario.network);
    let mut steps = Vec::with_capacity(net.len());
    let mut bulk = Vec::with_capacity(net.len());
    for (node, &(mut time, bytes)) in net.iter().enumerate() {
        if strategy == Strategy::NativeMic {
            time *= scenario.native_mic_penalty;
        }
        let work = node_work(scenario, node, strategy)?;
        let link = &scenario.nodes[node].transfer;
        bulk.push(bulk_transfer(work.resident, scenario.order, link));
        steps.push(simulate_node(node, &work, link, (time, bytes)));
    }
    Ok(SimTrace::from_nodes(scenario.order, scenario.steps, steps, &bulk))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub strategy: Strategy,
    pub step_time: f64,
    pub total_time: f64,
    pub hd_bytes_per_step: f64,
    pub net_bytes_per_step: f64,
    pub bulk_bytes: f64,
    pub host_idle: f64,
    pub device_idle: f64,
    /// `offload_none` total time over this strategy's total time.
    pub speedup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub order: usize,
    pub elements: usize,
    pub nodes: usize,
    pub steps: usize,
    pub results: Vec<StrategyResult>,
}

impl Comparison {
    pub fn get(&self, strategy: Strategy) -> Option<&StrategyResult> {
        self.results.iter().find(|r| r.strategy == strategy)
    }

    pub const CSV_HEADER: &'static str =
        "strategy,step_time_s,total_time_s,hd_bytes_per_step,net_bytes_per_step,bulk_bytes,host_idle,device_idle,speedup";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.results {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{},{},{},{:.6},{:.6},{:.6}",
                r.strategy,
                r.step_time,
                r.total_time,
                r.hd_bytes_per_step,
                r.net_bytes_per_step,
                r.bulk_bytes,
                r.host_idle,
                r.device_idle,
                r.speedup
            );
        }
        out
    }
}

/// Simulate each strategy on the same scenario; speedups are relative to
/// `offload_none`, which is always simulated.
pub fn compare_strategies(scenario: &SimScenario, strategies: &[Strategy]) -> Result<Comparison> {
    let baseline = simulate_strategy(scenario, Strategy::OffloadNone)?.total_time;
    let results = strategies
        .iter()
        .map(|&strategy| {
            let t = simulate_strategy(scenario, strategy)?;
            Ok(StrategyResult {
                strategy,
                step_time: t.step_time,
                total_time: t.total_time,
                hd_bytes_per_step: t.hd_bytes_per_step(),
                net_bytes_per_step: t.net_bytes_per_step(),
                bulk_bytes: t.bulk_bytes,
                host_idle: t.host_idle_fraction(),
                device_idle: t.device_idle_fraction(),
                speedup: baseline / t.total_time,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Comparison {
        order: scenario.order,
        elements: scenario.mesh.len(),
        nodes: scenario.partition.node_count(),
        steps: scenario.steps,
        results,
    })
}
