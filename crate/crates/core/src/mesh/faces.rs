use super::{face_normal, Mesh, Neighbor, FACES_PER_ELEMENT};

/// A face shared by two elements, listed once from its low-coordinate side:
/// `face_minus` is always a high-side (odd) local face.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InteriorFace {
    pub minus: usize,
    pub face_minus: usize,
    pub plus: usize,
    pub face_plus: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryFace {
    pub element: usize,
    pub face: usize,
    pub normal: [f64; 3],
}

/// Deduplicated face list. Interior faces get global ids `0..interior.len()`
/// and boundary faces follow, both in (element, local face) order.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceMesh {
    pub interior: Vec<InteriorFace>,
    pub boundary: Vec<BoundaryFace>,
    /// Global face id of every (element, local face) slot.
    pub face_ids: Vec<[usize; FACES_PER_ELEMENT]>,
}

impl FaceMesh {
    pub fn len(&self) -> usize {
        self.interior.len() + self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn extract_face_mesh(mesh: &Mesh) -> FaceMesh {
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for id in 0..mesh.len() {
        for (face, n) in mesh.neighbors(id).iter().enumerate() {
            match *n {
                Neighbor::Element { element, face: back } if face % 2 == 1 => {
                    interior.push(InteriorFace { minus: id, face_minus: face, plus: element, face_plus: back });
                }
                Neighbor::Element { .. } => {}
                Neighbor::Boundary => boundary.push(BoundaryFace { element: id, face, normal: face_normal(face) }),
            }
        }
    }

    let mut face_ids = vec![[usize::MAX; FACES_PER_ELEMENT]; mesh.len()];
    for (gid, f) in interior.iter().enumerate() {
        face_ids[f.minus][f.face_minus] = gid;
        face_ids[f.plus][f.face_plus] = gid;
    }
    let offset = interior.len();
    for (i, f) in boundary.iter().enumerate() {
        face_ids[f.element][f.face] = offset + i;
    }

    FaceMesh { interior, boundary, face_ids }
}
