use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{NestedPartition, NodePartition, PartitionStats};
use crate::error::Result;
use crate::mesh::Mesh;

/// On-disk partition: one entry per node with its half-open Morton range and
/// the elements offloaded to its device.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub nodes: Vec<PartitionFileNode>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionFileNode {
    pub range: [usize; 2],
    pub device_elems: Vec<usize>,
}

impl From<&NestedPartition> for PartitionFile {
    fn from(p: &NestedPartition) -> Self {
        let nodes = p
            .node
            .ranges
            .iter()
            .zip(&p.device_sets)
            .map(|(r, d)| PartitionFileNode { range: [r.start, r.end], device_elems: d.clone() })
            .collect();
        Self { nodes }
    }
}

impl PartitionFile {
    /// Rebuild the full partition (host sets, shared faces) against `mesh`.
    pub fn resolve(&self, mesh: &Mesh) -> Result<NestedPartition> {
        let node = NodePartition { ranges: self.nodes.iter().map(|n| n.range[0]..n.range[1]).collect() };
        let device_sets: Vec<Vec<usize>> = self.nodes.iter().map(|n| n.device_elems.clone()).collect();
        let requested = device_sets.iter().map(Vec::len).collect();
        NestedPartition::from_device_sets(mesh, node, device_sets, requested)
    }
}

pub fn read_partition_json(mesh: &Mesh, text: &str) -> Result<NestedPartition> {
    let file: PartitionFile = serde_json::from_str(text)?;
    file.resolve(mesh)
}

pub fn stats_to_csv(stats: &PartitionStats) -> String {
    let mut out = String::from("node,K,K_dev,surface_faces,transfer_dof\n");
    for n in &stats.nodes {
        let _ = writeln!(out, "{},{},{},{},{}", n.node, n.k, n.k_dev, n.surface_faces, n.transfer_dof);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, MeshConfig};
    use crate::partition::{nested_partition, RatioBalancer};

    #[test]
    fn json_round_trip() {
        let mesh = build_mesh(&MeshConfig::brick(3, 1.0)).unwrap();
        let p = nested_partition(&mesh, 4, &RatioBalancer(1.6)).unwrap();
        let text = serde_json::to_string(&PartitionFile::from(&p)).unwrap();
        let back = read_partition_json(&mesh, &text).unwrap();
        assert_eq!(back.device_sets, p.device_sets);
        assert_eq!(back.host_sets, p.host_sets);
        assert_eq!(back.shared_faces, p.shared_faces);
    }

    #[test]
    fn rejects_partition_for_other_mesh() {
        let small = build_mesh(&MeshConfig::brick(1, 1.0)).unwrap();
        let big = build_mesh(&MeshConfig::brick(2, 1.0)).unwrap();
        let p = nested_partition(&big, 2, &RatioBalancer(0.5)).unwrap();
        let text = serde_json::to_string(&PartitionFile::from(&p)).unwrap();
        assert!(read_partition_json(&small, &text).is_err());
    }

    #[test]
    fn stats_csv_layout() {
        let mesh = build_mesh(&MeshConfig::brick(2, 1.0)).unwrap();
        let p = nested_partition(&mesh, 1, &RatioBalancer(1.0)).unwrap();
        let csv = stats_to_csv(&p.stats(2));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("node,K,K_dev,surface_faces,transfer_dof"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0..3], ["0", "64", "32"]);
        let faces: usize = row[3].parse().unwrap();
        assert_eq!(row[4].parse::<usize>().unwrap(), 2 * faces * 9 * 12);
    }
}
