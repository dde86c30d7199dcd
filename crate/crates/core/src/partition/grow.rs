use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use super::{interior_elements, NodePartition};
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Faces of `set` elements not shared with another `set` element, domain
/// boundary faces included.
pub fn surface_faces(mesh: &Mesh, set: &[usize]) -> usize {
    let mut member = vec![false; mesh.len()];
    for &e in set {
        member[e] = true;
    }
    set.iter()
        .map(|&e| {
            mesh.neighbors(e)
                .iter()
                .filter(|n| n.element().is_none_or(|o| !member[o]))
                .count()
        })
        .sum()
}

/// Graph distance of every element in `range` to the nearest element of the
/// range that has a face leaving the range (including domain boundary faces).
fn depth_in_range(mesh: &Mesh, range: &std::ops::Range<usize>) -> Vec<usize> {
    let base = range.start;
    let mut depth = vec![usize::MAX; range.len()];
    let mut queue = VecDeque::new();
    for e in range.clone() {
        let exposed = mesh
            .neighbors(e)
            .iter()
            .any(|n| n.element().is_none_or(|o| !range.contains(&o)));
        if exposed {
            depth[e - base] = 0;
            queue.push_back(e);
        }
    }
    while let Some(e) = queue.pop_front() {
        let d = depth[e - base];
        for o in mesh.neighbors(e).iter().filter_map(|n| n.element()) {
            if range.contains(&o) && depth[o - base] == usize::MAX {
                depth[o - base] = d + 1;
                queue.push_back(o);
            }
        }
    }
    depth
}

fn squared_distance(a: [i64; 3], b: [i64; 3]) -> i64 {
    (0..3).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum()
}

/// Grow a compact set of `k_dev` interior elements of `node`.
///
/// Growth starts at the interior element deepest inside the node's range and
/// repeatedly adds the frontier candidate with the most already-selected
/// neighbours; ties go to the candidate closest to the seed, then to the
/// smallest element id. If the seed's connected component runs out, growth
/// restarts from the deepest remaining interior element.
pub fn grow_device_set(mesh: &Mesh, part: &NodePartition, node: usize, k_dev: usize) -> Result<Vec<usize>> {
    let interior = interior_elements(mesh, part, node);
    if k_dev > interior.len() {
        return Err(Error::InfeasibleDeviceSet { node, requested: k_dev, max_feasible: interior.len() });
    }
    if k_dev == interior.len() {
        return Ok(interior);
    }
    let mut chosen = grow(mesh, part, node, &interior, k_dev);
    chosen.sort_unstable();
    Ok(chosen)
}

/// The whole interior of `node` in growth order. The first `k` entries are
/// exactly the set [`grow_device_set`] returns for `k`.
pub fn growth_order(mesh: &Mesh, part: &NodePartition, node: usize) -> Vec<usize> {
    let interior = interior_elements(mesh, part, node);
    grow(mesh, part, node, &interior, interior.len())
}

fn grow(mesh: &Mesh, part: &NodePartition, node: usize, interior: &[usize], k_dev: usize) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(k_dev);
    if k_dev == 0 {
        return chosen;
    }
    let range = part.ranges[node].clone();
    let base = range.start;
    let depth = depth_in_range(mesh, &range);
    let mut eligible = vec![false; range.len()];
    for &e in interior {
        eligible[e - base] = true;
    }
    let mut selected = vec![false; range.len()];
    let mut touching = vec![0u8; range.len()];

    // Heap entries: (selected neighbours, -distance to seed, -id). Stale
    // entries are skipped on pop by re-checking the neighbour count.
    let mut heap: BinaryHeap<(u8, Reverse<i64>, Reverse<usize>)> = BinaryHeap::new();

    while chosen.len() < k_dev {
        let seed = interior
            .iter()
            .copied()
            .filter(|&e| !selected[e - base])
            .max_by_key(|&e| (depth[e - base], Reverse(e)))
            .expect("k_dev never exceeds the interior supply");
        let seed_pos = mesh.global_coords(seed);
        heap.clear();
        heap.push((0, Reverse(0), Reverse(seed)));

        while chosen.len() < k_dev {
            let Some((count, _, Reverse(e))) = heap.pop() else { break };
            if selected[e - base] || count != touching[e - base] {
                continue;
            }
            selected[e - base] = true;
            chosen.push(e);
            for o in mesh.neighbors(e).iter().filter_map(|n| n.element()) {
                if !range.contains(&o) || !eligible[o - base] || selected[o - base] {
                    continue;
                }
                touching[o - base] += 1;
                let dist = squared_distance(mesh.global_coords(o), seed_pos);
                heap.push((touching[o - base], Reverse(dist), Reverse(o)));
            }
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, MeshConfig};
    use crate::partition::splice;

    /// Best surface over Euclidean balls: for every half-integer centre in the
    /// brick, take the `k` nearest interior elements (ties by id) and count
    /// their exposed faces.
    fn ball_oracle(mesh: &Mesh, candidates: &[usize], k: usize) -> usize {
        let side = 1i64 << mesh.level();
        let mut best = usize::MAX;
        for cz in 0..=2 * side {
            for cy in 0..=2 * side {
                for cx in 0..=2 * side {
                    let mut order: Vec<(i64, usize)> = candidates
                        .iter()
                        .map(|&e| {
                            let g = mesh.global_coords(e);
                            let d = [cx, cy, cz]
                                .iter()
                                .zip(g)
                                .map(|(c, g)| (2 * g + 1 - c).pow(2))
                                .sum::<i64>();
                            (d, e)
                        })
                        .collect();
                    order.sort_unstable();
                    let set: Vec<usize> = order[..k].iter().map(|p| p.1).collect();
                    best = best.min(surface_faces(mesh, &set));
                }
            }
        }
        best
    }

    #[test]
    fn trivial_sizes() {
        let mesh = build_mesh(&MeshConfig::brick(3, 1.0)).unwrap();
        let part = splice(&mesh, 1).unwrap();
        assert!(grow_device_set(&mesh, &part, 0, 0).unwrap().is_empty());
        let all = grow_device_set(&mesh, &part, 0, 512).unwrap();
        assert_eq!(all, interior_elements(&mesh, &part, 0));
        match grow_device_set(&mesh, &part, 0, 513) {
            Err(Error::InfeasibleDeviceSet { max_feasible, .. }) => assert_eq!(max_feasible, 512),
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn cube_of_27_is_compact() {
        let mesh = build_mesh(&MeshConfig::brick(3, 1.0)).unwrap();
        let part = splice(&mesh, 1).unwrap();
        let set = grow_device_set(&mesh, &part, 0, 27).unwrap();
        let surface = surface_faces(&mesh, &set);
        assert!(surface <= 67, "surface {surface}");
        let all: Vec<usize> = (0..mesh.len()).collect();
        let oracle = ball_oracle(&mesh, &all, 27);
        assert_eq!(oracle, 54);
        assert!(surface as f64 <= 1.25 * oracle as f64);
    }

    #[test]
    fn cubic_counts_stay_economical() {
        let mesh = build_mesh(&MeshConfig::brick(3, 1.0)).unwrap();
        let part = splice(&mesh, 1).unwrap();
        for m in 2..=4usize {
            let set = grow_device_set(&mesh, &part, 0, m * m * m).unwrap();
            let surface = surface_faces(&mesh, &set) as f64;
            assert!(surface <= 1.25 * 6.0 * (m * m) as f64, "m = {m}: {surface}");
        }
    }

    #[test]
    fn growth_is_connected_and_interior() {
        let mesh = build_mesh(&MeshConfig::row(2, 3, 1.0)).unwrap();
        let part = splice(&mesh, 3).unwrap();
        for node in 0..3 {
            let interior = interior_elements(&mesh, &part, node);
            for k in [1, interior.len() / 3, interior.len() / 2] {
                let set = grow_device_set(&mesh, &part, node, k).unwrap();
                assert_eq!(set.len(), k);
                assert!(set.iter().all(|e| interior.contains(e)));
            }
        }
    }

    #[test]
    fn shared_face_count_is_nearly_monotone() {
        let mesh = build_mesh(&MeshConfig::brick(3, 1.0)).unwrap();
        let part = splice(&mesh, 2).unwrap();
        let interior = interior_elements(&mesh, &part, 0).len();
        let mut best = 0usize;
        // Past half the interior the host shrinks to a shell around the device
        // set and the shared face count must eventually fall to the shell area.
        for k in 1..=interior / 2 {
            let set = grow_device_set(&mesh, &part, 0, k).unwrap();
            let p = crate::partition::NestedPartition::from_device_sets(
                &mesh,
                part.clone(),
                vec![set, Vec::new()],
                vec![k, 0],
            )
            .unwrap();
            let shared = p.shared_faces[0].len();
            assert!(shared + 6 >= best, "k = {k}: {shared} after {best}");
            best = best.max(shared);
        }
    }

    #[test]
    fn growth_order_prefixes_match_grown_sets() {
        let mesh = build_mesh(&MeshConfig::brick(3, 1.0)).unwrap();
        let part = splice(&mesh, 2).unwrap();
        let order = growth_order(&mesh, &part, 1);
        assert_eq!(order.len(), interior_elements(&mesh, &part, 1).len());
        for k in [0, 1, 7, 40, order.len() - 1, order.len()] {
            let mut prefix = order[..k].to_vec();
            prefix.sort_unstable();
            assert_eq!(prefix, grow_device_set(&mesh, &part, 1, k).unwrap(), "k = {k}");
        }
    }
}
