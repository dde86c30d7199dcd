//! Two-level nested partitioning.
//!
//! The Morton-ordered element list is first spliced into contiguous,
//! near-equal ranges, one per compute node. Inside each node, a compact set
//! of interior elements (elements that share no face with another node) is
//! handed to the node's accelerator; everything else stays on the host.

mod grow;
mod io;

use std::cmp::Ordering;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Neighbor};
use crate::STATE_COMPONENTS;

pub use grow::{grow_device_set, growth_order, surface_faces};
pub use io::{read_partition_json, stats_to_csv, PartitionFile, PartitionFileNode};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodePartition {
    pub ranges: Vec<Range<usize>>,
}

impl NodePartition {
    pub fn node_count(&self) -> usize {
        self.ranges.len()
    }

    pub fn element_count(&self) -> usize {
        self.ranges.last().map_or(0, |r| r.end)
    }

    /// Owning node of a global element id.
    pub fn node_of(&self, element: usize) -> usize {
        self.ranges
            .binary_search_by(|r| {
                if element < r.start {
                    Ordering::Greater
                } else if element >= r.end {
                    Ordering::Less
                } else {
                    Ordering::Equal
                }
            })
            .expect("element outside every node range")
    }

    fn check(&self, mesh: &Mesh) -> Result<()> {
        let mut next = 0;
        for (i, r) in self.ranges.iter().enumerate() {
            if r.start != next || r.end < r.start {
                return Err(Error::InvalidPartition(format!(
                    "node {i} range {r:?} does not continue at element {next}"
                )));
            }
            next = r.end;
        }
        if next != mesh.len() {
            return Err(Error::InvalidPartition(format!(
                "node ranges cover {next} elements but the mesh has {}",
                mesh.len()
            )));
        }
        Ok(())
    }
}

/// Splice the Morton curve into `node_count` contiguous ranges whose sizes
/// differ by at most one; the first `K mod node_count` nodes get the extra
/// element.
pub fn splice(mesh: &Mesh, node_count: usize) -> Result<NodePartition> {
    splice_count(mesh.len(), node_count)
}

/// [`splice`] for a bare element count.
pub fn splice_count(k: usize, node_count: usize) -> Result<NodePartition> {
    if node_count == 0 {
        return Err(Error::InvalidPartition("node count must be positive".into()));
    }
    if node_count > k {
        return Err(Error::InvalidPartition(format!(
            "{node_count} nodes requested for only {k} elements"
        )));
    }
    let base = k / node_count;
    let extra = k % node_count;
    let mut ranges = Vec::with_capacity(node_count);
    let mut start = 0;
    for i in 0..node_count {
        let len = base + usize::from(i < extra);
        ranges.push(start..start + len);
        start += len;
    }
    Ok(NodePartition { ranges })
}

/// Elements of `node` none of whose face neighbours belong to another node.
/// Domain-boundary faces do not disqualify an element.
pub fn interior_elements(mesh: &Mesh, part: &NodePartition, node: usize) -> Vec<usize> {
    let range = part.ranges[node].clone();
    range
        .clone()
        .filter(|&e| {
            mesh.neighbors(e)
                .iter()
                .all(|n| n.element().is_none_or(|o| range.contains(&o)))
        })
        .collect()
}

/// Decides how many elements each node offloads.
pub trait Balancer: Sync {
    /// Requested device element count for a node owning `node_elements`.
    fn device_elements(&self, node: usize, node_elements: usize) -> usize;
}

/// Fixed device/host ratio `r`: `K_dev = round(K r / (1 + r))`.
#[derive(Clone, Copy, Debug)]
pub struct RatioBalancer(pub f64);

impl Balancer for RatioBalancer {
    fn device_elements(&self, _node: usize, k: usize) -> usize {
        let r = self.0;
        (k as f64 * r / (1.0 + r)).round() as usize
    }
}

/// Fixed fraction of the node's elements.
#[derive(Clone, Copy, Debug)]
pub struct FractionBalancer(pub f64);

impl Balancer for FractionBalancer {
    fn device_elements(&self, _node: usize, k: usize) -> usize {
        (k as f64 * self.0.clamp(0.0, 1.0)).round() as usize
    }
}

impl<F: Fn(usize, usize) -> usize + Sync> Balancer for F {
    fn device_elements(&self, node: usize, k: usize) -> usize {
        self(node, k)
    }
}

/// A face between a device element and a host element of the same node.
/// `face` is local to the device element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedFace {
    pub device: usize,
    pub face: usize,
    pub host: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NestedPartition {
    pub node: NodePartition,
    /// Sorted device element ids per node.
    pub device_sets: Vec<Vec<usize>>,
    /// Sorted host element ids per node (complement of the device set).
    pub host_sets: Vec<Vec<usize>>,
    pub shared_faces: Vec<Vec<SharedFace>>,
    /// Device counts asked for by the balancer, before clamping.
    pub requested: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    pub node: usize,
    pub k: usize,
    pub k_dev: usize,
    pub k_host: usize,
    pub surface_faces: usize,
    pub transfer_dof: usize,
    pub clamped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionStats {
    pub order: usize,
    pub nodes: Vec<NodeStats>,
}

impl NestedPartition {
    pub fn node_count(&self) -> usize {
        self.node.node_count()
    }

    /// Host-only partition on top of an existing splice.
    pub fn host_only(node: NodePartition) -> Self {
        let n = node.node_count();
        let host_sets = node.ranges.iter().map(|r| r.clone().collect()).collect();
        Self {
            node,
            device_sets: vec![Vec::new(); n],
            host_sets,
            shared_faces: vec![Vec::new(); n],
            requested: vec![0; n],
        }
    }

    /// Assemble from explicit device sets, deriving host sets and shared faces.
    pub fn from_device_sets(
        mesh: &Mesh,
        node: NodePartition,
        device_sets: Vec<Vec<usize>>,
        requested: Vec<usize>,
    ) -> Result<Self> {
        node.check(mesh)?;
        let mut device_sets = device_sets;
        for set in &mut device_sets {
            set.sort_unstable();
        }
        if device_sets.len() != node.node_count() || requested.len() != node.node_count() {
            return Err(Error::InvalidPartition("one device set per node is required".into()));
        }
        let mut on_device = vec![false; mesh.len()];
        let mut host_sets = Vec::with_capacity(node.node_count());
        let mut shared_faces = Vec::with_capacity(node.node_count());
        for (n, set) in device_sets.iter().enumerate() {
            let range = &node.ranges[n];
            for &e in set {
                if !range.contains(&e) {
                    return Err(Error::InvalidPartition(format!(
                        "device element {e} lies outside node {n}'s range {range:?}"
                    )));
                }
                if on_device[e] {
                    return Err(Error::InvalidPartition(format!("device element {e} listed twice")));
                }
                on_device[e] = true;
            }
            for &e in set {
                if let Some(outside) = mesh
                    .neighbors(e)
                    .iter()
                    .filter_map(|nb| nb.element())
                    .find(|o| !range.contains(o))
                {
                    return Err(Error::InvalidPartition(format!(
                        "device element {e} on node {n} touches element {outside} of another node"
                    )));
                }
            }
        }
        for (n, set) in device_sets.iter().enumerate() {
            host_sets.push(node.ranges[n].clone().filter(|&e| !on_device[e]).collect());
            let mut shared = Vec::new();
            for &e in set {
                for (face, nb) in mesh.neighbors(e).iter().enumerate() {
                    if let Neighbor::Element { element, .. } = *nb {
                        if !on_device[element] {
                            shared.push(SharedFace { device: e, face, host: element });
                        }
                    }
                }
            }
            shared_faces.push(shared);
        }
        Ok(Self { node, device_sets, host_sets, shared_faces, requested })
    }

    /// Element sets in execution order: for each node, host part then device
    /// part. Empty parts are kept so indices stay `2 * node + is_device`.
    pub fn parts(&self) -> Vec<&[usize]> {
        self.host_sets
            .iter()
            .zip(&self.device_sets)
            .flat_map(|(h, d)| [h.as_slice(), d.as_slice()])
            .collect()
    }

    pub fn stats(&self, order: usize) -> PartitionStats {
        let face_dof = (order + 1) * (order + 1) * STATE_COMPONENTS;
        let nodes = (0..self.node_count())
            .map(|n| {
                let k_dev = self.device_sets[n].len();
                let k_host = self.host_sets[n].len();
                let shared = self.shared_faces[n].len();
                NodeStats {
                    node: n,
                    k: k_dev + k_host,
                    k_dev,
                    k_host,
                    surface_faces: shared,
                    transfer_dof: 2 * shared * face_dof,
                    clamped: self.requested[n] > k_dev,
                }
            })
            .collect();
        PartitionStats { order, nodes }
    }
}

/// Splice, then grow each node's device set to the balancer's request.
/// Requests larger than the interior supply are clamped to the full interior
/// (reported through [`NodeStats::clamped`]).
pub fn nested_partition(mesh: &Mesh, node_count: usize, balancer: &dyn Balancer) -> Result<NestedPartition> {
    let node = splice(mesh, node_count)?;
    let grown: Vec<(usize, Vec<usize>)> = (0..node_count)
        .into_par_iter()
        .map(|n| {
            let k = node.ranges[n].len();
            let requested = balancer.device_elements(n, k);
            let supply = interior_elements(mesh, &node, n).len();
            let set = grow_device_set(mesh, &node, n, requested.min(supply))?;
            Ok((requested, set))
        })
        .collect::<Result<_>>()?;
    let (requested, device_sets) = grown.into_iter().unzip();
    NestedPartition::from_device_sets(mesh, node, device_sets, requested)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, MeshConfig};
    use proptest::prelude::*;

    fn brick(level: u32) -> Mesh {
        build_mesh(&MeshConfig::brick(level, 1.0)).unwrap()
    }

    fn forest(trees: usize, level: u32) -> Mesh {
        build_mesh(&MeshConfig::row(trees, level, 1.0)).unwrap()
    }

    #[test]
    fn splice_examples() {
        let mesh = brick(2);
        let p = splice(&mesh, 4).unwrap();
        assert_eq!(p.ranges, vec![0..16, 16..32, 32..48, 48..64]);

        let ten = splice_count(10, 3).unwrap();
        assert_eq!(ten.ranges, vec![0..4, 4..7, 7..10]);

        let p = splice(&mesh, 1).unwrap();
        assert_eq!(p.ranges, vec![0..64]);
        assert!(splice(&mesh, 0).is_err());
        assert!(splice(&mesh, 65).is_err());
    }

    #[test]
    fn splice_remainder_distribution() {
        // 8 trees at level 0 plus uneven node counts.
        let mesh = forest(8, 0);
        let p = splice(&mesh, 3).unwrap();
        let lens: Vec<usize> = p.ranges.iter().map(|r| r.len()).collect();
        assert_eq!(lens, vec![3, 3, 2]);
        let mesh = build_mesh(&MeshConfig::row(5, 1, 1.0)).unwrap();
        let p = splice(&mesh, 3).unwrap();
        let lens: Vec<usize> = p.ranges.iter().map(|r| r.len()).collect();
        assert_eq!(lens, vec![14, 13, 13]);
    }

    /// Brute-force interior check: scan every face of every element.
    fn interior_oracle(mesh: &Mesh, part: &NodePartition, node: usize) -> Vec<usize> {
        let mut owner = vec![0; mesh.len()];
        for (n, r) in part.ranges.iter().enumerate() {
            for e in r.clone() {
                owner[e] = n;
            }
        }
        let mut out = Vec::new();
        for e in 0..mesh.len() {
            if owner[e] != node {
                continue;
            }
            let g = mesh.global_coords(e);
            let mut ok = true;
            for other in 0..mesh.len() {
                let h = mesh.global_coords(other);
                let dist: i64 = (0..3).map(|a| (g[a] - h[a]).abs()).sum();
                if dist == 1 && owner[other] != node {
                    ok = false;
                }
            }
            if ok {
                out.push(e);
            }
        }
        out
    }

    #[test]
    fn interior_examples() {
        let mesh = brick(2);
        let one = splice(&mesh, 1).unwrap();
        assert_eq!(interior_elements(&mesh, &one, 0).len(), 64);

        let two = splice(&mesh, 2).unwrap();
        for n in 0..2 {
            let got = interior_elements(&mesh, &two, n);
            assert_eq!(got, interior_oracle(&mesh, &two, n));
            // Halves split at z = 2; the z = 1 (or z = 2) layer is exposed.
            assert_eq!(got.len(), 16);
        }

        let small = brick(1);
        let eight = splice(&small, 8).unwrap();
        for n in 0..8 {
            assert!(interior_elements(&small, &eight, n).is_empty());
        }
    }

    #[test]
    fn interior_matches_oracle_on_forest() {
        let mesh = forest(3, 2);
        for nodes in [2, 3, 5, 7] {
            let part = splice(&mesh, nodes).unwrap();
            for n in 0..nodes {
                assert_eq!(interior_elements(&mesh, &part, n), interior_oracle(&mesh, &part, n));
            }
        }
    }

    #[test]
    fn paper_ratio_on_one_node() {
        let mesh = forest(2, 4);
        assert_eq!(mesh.len(), 8192);
        let p = nested_partition(&mesh, 1, &RatioBalancer(1.6)).unwrap();
        assert_eq!(p.device_sets[0].len(), 5041);
        assert_eq!(p.host_sets[0].len(), 3151);
        let stats = p.stats(7);
        assert_eq!(stats.nodes[0].k, 8192);
        assert!(!stats.nodes[0].clamped);
        assert_eq!(stats.nodes[0].transfer_dof, 2 * p.shared_faces[0].len() * 64 * 12);
    }

    #[test]
    fn zero_fraction_is_host_only() {
        let mesh = brick(3);
        let p = nested_partition(&mesh, 4, &FractionBalancer(0.0)).unwrap();
        assert!(p.device_sets.iter().all(Vec::is_empty));
        assert!(p.shared_faces.iter().all(Vec::is_empty));
        assert_eq!(p, NestedPartition::host_only(splice(&mesh, 4).unwrap()));
    }

    #[test]
    fn full_fraction_clamps_to_interior() {
        let mesh = brick(2);
        let p = nested_partition(&mesh, 1, &FractionBalancer(1.0)).unwrap();
        assert_eq!(p.device_sets[0].len(), 64);
        assert!(p.host_sets[0].is_empty());

        let p = nested_partition(&mesh, 2, &FractionBalancer(1.0)).unwrap();
        let stats = p.stats(3);
        for n in 0..2 {
            assert_eq!(p.device_sets[n].len(), 16);
            assert_eq!(p.requested[n], 32);
            assert!(stats.nodes[n].clamped);
        }
    }

    #[test]
    fn from_device_sets_rejects_bad_input() {
        let mesh = brick(2);
        let node = splice(&mesh, 2).unwrap();
        let boundary_elem = node.ranges[0].end - 1;
        assert!(NestedPartition::from_device_sets(&mesh, node.clone(), vec![vec![boundary_elem], vec![]], vec![1, 0]).is_err());
        assert!(NestedPartition::from_device_sets(&mesh, node.clone(), vec![vec![40], vec![]], vec![1, 0]).is_err());
        assert!(NestedPartition::from_device_sets(&mesh, node, vec![vec![0, 0], vec![]], vec![2, 0]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn nested_partition_invariants(trees in 1usize..4, level in 1u32..4, nodes in 1usize..6, ratio in 0.0f64..4.0) {
            let mesh = forest(trees, level);
            prop_assume!(nodes <= mesh.len());
            let p = nested_partition(&mesh, nodes, &RatioBalancer(ratio)).unwrap();
            let mut seen = vec![0u8; mesh.len()];
            for n in 0..nodes {
                for &e in p.device_sets[n].iter().chain(&p.host_sets[n]) {
                    prop_assert!(p.node.ranges[n].contains(&e));
                    seen[e] += 1;
                }
                for &e in &p.device_sets[n] {
                    for nb in mesh.neighbors(e) {
                        if let Some(o) = nb.element() {
                            prop_assert!(p.node.ranges[n].contains(&o));
                        }
                    }
                }
                for s in &p.shared_faces[n] {
                    prop_assert_eq!(mesh.neighbors(s.device)[s.face].element(), Some(s.host));
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            let again = nested_partition(&mesh, nodes, &RatioBalancer(ratio)).unwrap();
            prop_assert_eq!(again, p);
        }
    }
}
