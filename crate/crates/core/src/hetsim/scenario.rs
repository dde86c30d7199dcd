use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{build_mesh, Mesh, MeshConfig};
use crate::partition::{
    nested_partition, splice, FractionBalancer, NestedPartition, PartitionFileNode, RatioBalancer,
};
use crate::perfmodel::{balance, Device, DeviceProfile, Kernel, KernelTimeTable, TransferModel};

/// How a scenario's nested partition is produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionSpec {
    /// No device work at all.
    HostOnly { nodes: usize },
    /// `K_dev / K_host = ratio` on every node.
    Ratio { nodes: usize, ratio: f64 },
    /// `K_dev = fraction · K` on every node.
    Fraction { nodes: usize, fraction: f64 },
    /// Each node's device share comes from the load-balance solver.
    Balanced { nodes: usize },
    /// Explicit ranges and device sets, as written by `partition --out`.
    Explicit { nodes: Vec<PartitionFileNode> },
}

/// On-disk scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub mesh: MeshConfig,
    #[serde(rename = "N")]
    pub order: usize,
    pub steps: usize,
    pub table: KernelTimeTable,
    pub partition: PartitionSpec,
    /// None, one profile for every node, or one per node. When present, a
    /// node's device times are its profile applied to the host fits, and its
    /// host–device link is the profile's. Otherwise the table's device fits
    /// and transfer model are used.
    #[serde(default)]
    pub profiles: Vec<DeviceProfile>,
    /// Inter-node link.
    pub network: TransferModel,
    /// Network slowdown of the `native_mic` strategy.
    #[serde(default = "default_penalty")]
    pub native_mic_penalty: f64,
}

fn default_penalty() -> f64 {
    4.0
}

/// Cost model of one node: its fits and its host–device link.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeModel {
    pub table: KernelTimeTable,
    pub transfer: TransferModel,
}

/// A validated scenario ready to simulate.
#[derive(Clone, Debug)]
pub struct SimScenario {
    pub mesh: Mesh,
    pub partition: NestedPartition,
    pub order: usize,
    pub steps: usize,
    pub nodes: Vec<NodeModel>,
    pub network: TransferModel,
    pub native_mic_penalty: f64,
}

fn node_models(
    table: &KernelTimeTable,
    profiles: &[DeviceProfile],
    order: usize,
    n: usize,
) -> Result<Vec<NodeModel>> {
    match profiles.len() {
        0 => {
            table.check_order(order)?;
            Ok(vec![NodeModel { table: table.clone(), transfer: table.transfer }; n])
        }
        1 => {
            let t = table.with_device_profile(&profiles[0])?;
            t.check_order(order)?;
            Ok(vec![NodeModel { table: t, transfer: profiles[0].transfer }; n])
        }
        len if len == n => profiles
            .iter()
            .map(|p| {
                let t = table.with_device_profile(p)?;
                t.check_order(order)?;
                Ok(NodeModel { table: t, transfer: p.transfer })
            })
            .collect(),
        len => Err(Error::InvalidConfig(format!("{len} device profiles for {n} nodes; give 0, 1 or {n}"))),
    }
}

impl SimScenario {
    /// Validate and assemble. `nodes` holds one model per partition node.
    pub fn new(
        mesh: Mesh,
        partition: NestedPartition,
        order: usize,
        steps: usize,
        nodes: Vec<NodeModel>,
        network: TransferModel,
    ) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        network.validate()?;
        if nodes.len() != partition.node_count() {
            return Err(Error::InvalidConfig(format!(
                "{} node models for a {}-node partition",
                nodes.len(),
                partition.node_count()
            )));
        }
        for m in &nodes {
            m.table.check_order(order)?;
            m.transfer.validate()?;
        }
        // Rebuilding from the device sets re-checks ranges, interiority and
        // the shared-face lists against this mesh.
        let rebuilt = NestedPartition::from_device_sets(
            &mesh,
            partition.node.clone(),
            partition.device_sets.clone(),
            partition.requested.clone(),
        )?;
        if rebuilt.shared_faces != partition.shared_faces || rebuilt.host_sets != partition.host_sets {
            return Err(Error::InvalidPartition("partition does not match the mesh".into()));
        }
        Ok(Self { mesh, partition, order, steps, nodes, network, native_mic_penalty: default_penalty() })
    }

    pub fn from_file(file: &ScenarioFile) -> Result<Self> {
        if !(file.native_mic_penalty > 0.0 && file.native_mic_penalty.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "native_mic_penalty must be positive, got {}",
                file.native_mic_penalty
            )));
        }
        file.table.validate()?;
        let mesh = build_mesh(&file.mesh)?;
        let node_count = match &file.partition {
            PartitionSpec::HostOnly { nodes }
            | PartitionSpec::Ratio { nodes, .. }
            | PartitionSpec::Fraction { nodes, .. }
            | PartitionSpec::Balanced { nodes } => *nodes,
            PartitionSpec::Explicit { nodes } => nodes.len(),
        };
        let models = node_models(&file.table, &file.profiles, file.order, node_count)?;
        let partition = match &file.partition {
            PartitionSpec::HostOnly { nodes } => NestedPartition::host_only(splice(&mesh, *nodes)?),
            PartitionSpec::Ratio { nodes, ratio } => {
                if !(*ratio >= 0.0 && ratio.is_finite()) {
                    return Err(Error::InvalidConfig(format!("ratio must be finite and non-negative, got {ratio}")));
                }
                nested_partition(&mesh, *nodes, &RatioBalancer(*ratio))?
            }
            PartitionSpec::Fraction { nodes, fraction } => {
                if !(0.0..=1.0).contains(fraction) {
                    return Err(Error::InvalidConfig(format!("fraction must lie in [0, 1], got {fraction}")));
                }
                nested_partition(&mesh, *nodes, &FractionBalancer(*fraction))?
            }
            PartitionSpec::Balanced { nodes } => {
                let order = file.order;
                let splits: Vec<usize> = splice(&mesh, *nodes)?
                    .ranges
                    .iter()
                    .zip(&models)
                    .map(|(r, m)| balance(order, r.len(), &m.table, &m.transfer).map(|s| s.k_dev))
                    .collect::<Result<_>>()?;
                nested_partition(&mesh, *nodes, &|node: usize, _k: usize| splits[node])?
            }
            PartitionSpec::Explicit { nodes } => {
                crate::partition::PartitionFile { nodes: nodes.clone() }.resolve(&mesh)?
            }
        };
        let mut s = Self::new(mesh, partition, file.order, file.steps, models, file.network)?;
        s.native_mic_penalty = file.native_mic_penalty;
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        Self::from_file(&file)
    }

    /// Copy with one kernel's fits on `device` multiplied by `factor` on
    /// every node.
    pub fn with_perturbed_kernel(&self, kernel: Kernel, device: Device, factor: f64) -> Self {
        let mut s = self.clone();
        for m in &mut s.nodes {
            for e in &mut m.table.entries {
                if e.kernel == kernel && e.device == device {
                    e.a *= factor;
                    e.b *= factor;
                }
            }
        }
        s
    }
}
