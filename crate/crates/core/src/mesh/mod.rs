//! Morton-ordered hexahedral meshes.
//!
//! A mesh is a forest of axis-aligned cubic trees sitting on an integer
//! lattice, each uniformly refined to the same level. Elements are numbered
//! tree-major, Morton-minor; adjacency is rebuilt from the configuration, so
//! the configuration is the only thing ever serialized.

mod faces;
mod morton;

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use faces::{extract_face_mesh, BoundaryFace, FaceMesh, InteriorFace};
pub use morton::{morton_decode, morton_encode, MortonKey, MAX_LEVEL};

pub const FACES_PER_ELEMENT: usize = 6;
pub const MAX_TREES: usize = 8;

/// Axis normal to a local face (faces are numbered `2 * axis + side`).
pub const fn face_axis(face: usize) -> usize {
    face / 2
}

/// `+1.0` for the high-side face of an axis, `-1.0` for the low side.
pub const fn face_sign(face: usize) -> f64 {
    if face % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

pub const fn opposite_face(face: usize) -> usize {
    face ^ 1
}

pub fn face_normal(face: usize) -> [f64; 3] {
    let mut n = [0.0; 3];
    n[face_axis(face)] = face_sign(face);
    n
}

/// One tree of the forest. `origin` is given in tree-edge units, so two trees
/// abut exactly when their origins differ by one along a single axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeSpec {
    pub origin: [i64; 3],
    pub material_id: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshConfig {
    pub trees: Vec<TreeSpec>,
    pub level: u32,
    /// Physical edge length of one element.
    pub element_size: f64,
}

impl MeshConfig {
    /// A single unit-material tree.
    pub fn brick(level: u32, element_size: f64) -> Self {
        Self {
            trees: vec![TreeSpec { origin: [0, 0, 0], material_id: 0 }],
            level,
            element_size,
        }
    }

    /// `count` trees in a row along x; tree `i` uses material `i`.
    pub fn row(count: usize, level: u32, element_size: f64) -> Self {
        Self {
            trees: (0..count)
                .map(|i| TreeSpec { origin: [i as i64, 0, 0], material_id: i })
                .collect(),
            level,
            element_size,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Neighbor {
    Boundary,
    Element { element: usize, face: usize },
}

impl Neighbor {
    pub fn element(self) -> Option<usize> {
        match self {
            Neighbor::Boundary => None,
            Neighbor::Element { element, .. } => Some(element),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Element {
    pub tree: usize,
    pub key: MortonKey,
    /// Coordinates within the tree, in element units.
    pub coords: [u32; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "MeshConfig", try_from = "MeshConfig")]
pub struct Mesh {
    config: MeshConfig,
    elements: Vec<Element>,
    adjacency: Vec<[Neighbor; FACES_PER_ELEMENT]>,
}

impl From<Mesh> for MeshConfig {
    fn from(mesh: Mesh) -> Self {
        mesh.config
    }
}

impl TryFrom<MeshConfig> for Mesh {
    type Error = Error;

    fn try_from(config: MeshConfig) -> Result<Self> {
        build_mesh(&config)
    }
}

impl Mesh {
    pub fn config(&self) -> &MeshConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn level(&self) -> u32 {
        self.config.level
    }

    pub fn element_size(&self) -> f64 {
        self.config.element_size
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, id: usize) -> &Element {
        &self.elements[id]
    }

    pub fn neighbors(&self, id: usize) -> &[Neighbor; FACES_PER_ELEMENT] {
        &self.adjacency[id]
    }

    pub fn material_id(&self, id: usize) -> usize {
        self.config.trees[self.elements[id].tree].material_id
    }

    /// Integer lattice coordinates of an element across the whole forest.
    pub fn global_coords(&self, id: usize) -> [i64; 3] {
        let e = &self.elements[id];
        let origin = self.config.trees[e.tree].origin;
        let scale = 1i64 << self.config.level;
        [0, 1, 2].map(|a| origin[a] * scale + i64::from(e.coords[a]))
    }

    /// Physical position of the element's lowest corner.
    pub fn element_corner(&self, id: usize) -> [f64; 3] {
        let h = self.config.element_size;
        self.global_coords(id).map(|g| g as f64 * h)
    }

    pub fn element_center(&self, id: usize) -> [f64; 3] {
        let h = self.config.element_size;
        self.global_coords(id).map(|g| (g as f64 + 0.5) * h)
    }

    /// Physical bounding box `(lo, hi)` of the forest.
    pub fn bounding_box(&self) -> ([f64; 3], [f64; 3]) {
        let edge = self.config.element_size * (1u64 << self.config.level) as f64;
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for tree in &self.config.trees {
            for a in 0..3 {
                lo[a] = lo[a].min(tree.origin[a] as f64 * edge);
                hi[a] = hi[a].max((tree.origin[a] + 1) as f64 * edge);
            }
        }
        (lo, hi)
    }
}

fn validate(config: &MeshConfig) -> Result<()> {
    let n = config.trees.len();
    if n == 0 || n > MAX_TREES {
        return Err(Error::InvalidMesh(format!(
            "tree count must be in 1..={MAX_TREES}, got {n}"
        )));
    }
    if config.level > MAX_LEVEL {
        return Err(Error::LevelTooDeep(config.level));
    }
    if !(config.element_size.is_finite() && config.element_size > 0.0) {
        return Err(Error::InvalidMesh(format!(
            "element_size must be positive, got {}",
            config.element_size
        )));
    }
    let mut seen = HashSet::new();
    for (i, tree) in config.trees.iter().enumerate() {
        if !seen.insert(tree.origin) {
            return Err(Error::InvalidMesh(format!(
                "tree {i} overlaps another tree at origin {:?}",
                tree.origin
            )));
        }
    }
    // Face connectivity between trees.
    let index: HashMap<[i64; 3], usize> =
        config.trees.iter().enumerate().map(|(i, t)| (t.origin, i)).collect();
    let mut reached = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    reached[0] = true;
    while let Some(t) = queue.pop_front() {
        let o = config.trees[t].origin;
        for face in 0..FACES_PER_ELEMENT {
            let mut p = o;
            p[face_axis(face)] += if face % 2 == 1 { 1 } else { -1 };
            if let Some(&u) = index.get(&p) {
                if !reached[u] {
                    reached[u] = true;
                    queue.push_back(u);
                }
            }
        }
    }
    if let Some(lonely) = reached.iter().position(|r| !r) {
        return Err(Error::InvalidMesh(format!(
            "tree {lonely} does not abut the rest of the forest"
        )));
    }
    Ok(())
}

pub fn build_mesh(config: &MeshConfig) -> Result<Mesh> {
    validate(config)?;
    let level = config.level;
    let per_tree = 1usize << (3 * level);
    let side = 1u32 << level;

    let mut elements = Vec::with_capacity(per_tree * config.trees.len());
    for tree in 0..config.trees.len() {
        // Keys of a full uniform tree are exactly 0..8^level.
        for code in 0..per_tree as u64 {
            let key = MortonKey { code, level };
            let (x, y, z) = morton_decode(key);
            elements.push(Element { tree, key, coords: [x, y, z] });
        }
    }

    let scale = i64::from(side);
    let lattice: HashMap<[i64; 3], usize> = elements
        .iter()
        .enumerate()
        .map(|(id, e)| {
            let o = config.trees[e.tree].origin;
            ([0, 1, 2].map(|a| o[a] * scale + i64::from(e.coords[a])), id)
        })
        .collect();

    let mut adjacency = vec![[Neighbor::Boundary; FACES_PER_ELEMENT]; elements.len()];
    for (id, e) in elements.iter().enumerate() {
        let o = config.trees[e.tree].origin;
        let g = [0, 1, 2].map(|a| o[a] * scale + i64::from(e.coords[a]));
        for face in 0..FACES_PER_ELEMENT {
            let mut p = g;
            p[face_axis(face)] += if face % 2 == 1 { 1 } else { -1 };
            if let Some(&other) = lattice.get(&p) {
                adjacency[id][face] = Neighbor::Element { element: other, face: opposite_face(face) };
            }
        }
    }

    Ok(Mesh { config: config.clone(), elements, adjacency })
}
