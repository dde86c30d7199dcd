//! Semi-discrete assembly over a partitioned mesh and the RK4 time loop.
//!
//! Every element accumulates its rate in the same order no matter how the
//! mesh is partitioned: the volume term first, then its six face brackets
//! sorted by global face id. Partitioning only decides which part computes an
//! element and whether a neighbour trace is read locally or through the
//! exchange buffer, so any partition reproduces the single-part state bit for
//! bit.

mod config;
mod exact;
mod snapshot;

use std::time::Instant;

use rayon::prelude::*;

use crate::dg::{interp_q, lift, volume_loop, ReferenceElement, VolumeScratch};
use crate::error::{Error, Result};
use crate::mesh::{extract_face_mesh, face_normal, opposite_face, Mesh, Neighbor, FACES_PER_ELEMENT};
use crate::partition::NestedPartition;
use crate::perfmodel::{Kernel, KernelTimes};
use crate::physics::{riemann_flux, traction, traction_bc, Material, Vec3, WaveState};
use crate::STATE_COMPONENTS;

pub use config::{
    run, BoundaryConfig, InitialCondition, PartitionConfig, RunSummary, Simulation, SolveConfig, TractionKind,
};
pub use exact::{velocity_coefficients, ExactSolution, Profile};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};

/// How an element face obtains its neighbour state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceClass {
    /// Domain boundary, closed with the traction mirror.
    Boundary,
    /// Neighbour computed by the same part.
    Interior,
    /// Neighbour owned by another part; its trace arrives through the
    /// exchange buffer.
    Shared,
}

impl FaceClass {
    fn kernel(self) -> Kernel {
        match self {
            FaceClass::Boundary => Kernel::BoundFlux,
            FaceClass::Interior => Kernel::IntFlux,
            FaceClass::Shared => Kernel::ParallelFlux,
        }
    }
}

/// Traction prescribed on boundary faces.
#[derive(Clone, Debug, Default)]
pub struct Boundary {
    /// Traction of this solution on every boundary face, or zero when absent.
    pub exact: Option<ExactSolution>,
    /// Outward face directions (`2 axis + side`) that stay traction free even
    /// when `exact` is set.
    pub free_directions: Vec<usize>,
}

impl Boundary {
    pub fn free() -> Self {
        Self::default()
    }

    fn traction(&self, face: usize, mat: &Material, x: &Vec3, n: &Vec3, t: f64) -> Vec3 {
        match &self.exact {
            Some(sol) if !self.free_directions.contains(&face) => traction(mat, &sol.state(x, t), n),
            _ => [0.0; 3],
        }
    }
}

/// Buffers reused across right-hand-side evaluations.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    traces: Vec<f64>,
    ghost: Vec<f64>,
    brackets: Vec<f64>,
}

/// Mesh, reference element, materials and partition-derived face data.
#[derive(Clone, Debug)]
pub struct Discretization {
    mesh: Mesh,
    reference: ReferenceElement,
    materials: Vec<Material>,
    boundary: Boundary,
    part_of: Vec<usize>,
    classes: Vec<[FaceClass; FACES_PER_ELEMENT]>,
    face_order: Vec<[usize; FACES_PER_ELEMENT]>,
}

impl Discretization {
    /// `materials` is indexed by tree material id. Without a partition all
    /// elements belong to one part.
    pub fn new(
        mesh: Mesh,
        order: usize,
        materials: &[Material],
        boundary: Boundary,
        partition: Option<&NestedPartition>,
    ) -> Result<Self> {
        let reference = ReferenceElement::new(order)?;
        let element_materials = (0..mesh.len())
            .map(|e| {
                let id = mesh.material_id(e);
                materials.get(id).copied().ok_or_else(|| {
                    Error::InvalidConfig(format!("material id {id} has no entry in the material table"))
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut part_of = vec![0; mesh.len()];
        if let Some(p) = partition {
            if p.node.element_count() != mesh.len() {
                return Err(Error::InvalidPartition(format!(
                    "partition covers {} elements but the mesh has {}",
                    p.node.element_count(),
                    mesh.len()
                )));
            }
            for (idx, part) in p.parts().iter().enumerate() {
                for &e in *part {
                    part_of[e] = idx;
                }
            }
        }

        let classes = (0..mesh.len())
            .map(|e| {
                std::array::from_fn(|f| match mesh.neighbors(e)[f] {
                    Neighbor::Boundary => FaceClass::Boundary,
                    Neighbor::Element { element, .. } if part_of[element] == part_of[e] => FaceClass::Interior,
                    Neighbor::Element { .. } => FaceClass::Shared,
                })
            })
            .collect();

        let faces = extract_face_mesh(&mesh);
        let face_order = faces
            .face_ids
            .iter()
            .map(|ids| {
                let mut order: [usize; FACES_PER_ELEMENT] = std::array::from_fn(|f| f);
                order.sort_by_key(|&f| ids[f]);
                order
            })
            .collect();

        Ok(Self {
            mesh,
            reference,
            materials: element_materials,
            boundary,
            part_of,
            classes,
            face_order,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn reference(&self) -> &ReferenceElement {
        &self.reference
    }

    pub fn order(&self) -> usize {
        self.reference.order
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    pub fn element_count(&self) -> usize {
        self.mesh.len()
    }

    /// Values per element: `12 (N+1)³`.
    pub fn element_len(&self) -> usize {
        STATE_COMPONENTS * self.reference.volume_nodes()
    }

    pub fn state_len(&self) -> usize {
        self.element_count() * self.element_len()
    }

    pub fn face_class(&self, element: usize, face: usize) -> FaceClass {
        self.classes[element][face]
    }

    /// Physical position of volume node `node` of `element`.
    pub fn node_position(&self, element: usize, node: usize) -> Vec3 {
        let corner = self.mesh.element_corner(element);
        let r = self.reference.node_coords(node);
        let h = self.mesh.element_size();
        [0, 1, 2].map(|a| corner[a] + 0.5 * (r[a] + 1.0) * h)
    }

    /// Fastest P-wave speed over all elements.
    pub fn max_speed(&self) -> f64 {
        self.materials.iter().map(Material::cp).fold(0.0, f64::max)
    }

    /// Sample a pointwise state on every node, element-major.
    pub fn project(&self, f: impl Fn(&Vec3) -> WaveState + Sync) -> Vec<f64> {
        let np = self.reference.volume_nodes();
        let mut q = vec![0.0; self.state_len()];
        q.par_chunks_mut(self.element_len()).enumerate().for_each(|(e, block)| {
            for node in 0..np {
                let c = f(&self.node_position(e, node)).to_components();
                for (comp, v) in c.iter().enumerate() {
                    block[comp * np + node] = *v;
                }
            }
        });
        q
    }

    /// Nodal state of `element` at `node`.
    pub fn state_at(&self, q: &[f64], element: usize, node: usize) -> WaveState {
        let np = self.reference.volume_nodes();
        let block = &q[element * self.element_len()..(element + 1) * self.element_len()];
        let c: Vec<f64> = (0..STATE_COMPONENTS).map(|comp| block[comp * np + node]).collect();
        WaveState::from_components(&c)
    }

    pub fn energy(&self, q: &[f64]) -> f64 {
        crate::physics::energy(q, &self.materials, &self.reference, self.mesh.element_size())
    }

    /// Semi-discrete rate `dq/dt` at time `t`, accumulating per-kernel wall
    /// time into `timers`.
    pub fn rhs(&self, t: f64, q: &[f64], rate: &mut [f64], work: &mut Workspace, timers: &mut KernelTimes) -> Result<()> {
        let k = self.element_count();
        if q.len() != self.state_len() || rate.len() != self.state_len() {
            return Err(Error::DimensionMismatch { expected: self.state_len(), actual: q.len().min(rate.len()) });
        }
        let r = &self.reference;
        let nf = r.face_node_count();
        let face_len = STATE_COMPONENTS * nf;
        let trace_len = FACES_PER_ELEMENT * face_len;
        let elem_len = self.element_len();
        for buf in [&mut work.traces, &mut work.ghost, &mut work.brackets] {
            buf.resize(k * trace_len, 0.0);
        }
        let h = self.mesh.element_size();

        let clock = Instant::now();
        work.traces
            .par_chunks_mut(trace_len)
            .zip(q.par_chunks(elem_len))
            .for_each(|(tr, qe)| interp_q(r, qe, tr));
        timers[Kernel::InterpQ] += clock.elapsed().as_secs_f64();

        for class in [FaceClass::Interior, FaceClass::Boundary, FaceClass::Shared] {
            let clock = Instant::now();
            if class == FaceClass::Shared {
                let traces = &work.traces;
                work.ghost.par_chunks_mut(trace_len).enumerate().for_each(|(e, g)| {
                    for f in 0..FACES_PER_ELEMENT {
                        if self.classes[e][f] == FaceClass::Shared {
                            let nb = self.mesh.neighbors(e)[f].element().expect("shared faces have a neighbour");
                            let src = nb * trace_len + opposite_face(f) * face_len;
                            g[f * face_len..(f + 1) * face_len].copy_from_slice(&traces[src..src + face_len]);
                        }
                    }
                });
            }
            let traces = &work.traces;
            let ghost = &work.ghost;
            work.brackets.par_chunks_mut(trace_len).enumerate().for_each(|(e, b)| {
                for f in 0..FACES_PER_ELEMENT {
                    if self.classes[e][f] != class {
                        continue;
                    }
                    let own = &traces[e * trace_len + f * face_len..][..face_len];
                    let out = &mut b[f * face_len..(f + 1) * face_len];
                    match class {
                        FaceClass::Boundary => self.boundary_bracket(e, f, own, t, out),
                        FaceClass::Interior => {
                            let nb = self.mesh.neighbors(e)[f].element().expect("interior faces have a neighbour");
                            let other = &traces[nb * trace_len + opposite_face(f) * face_len..][..face_len];
                            self.interface_bracket(e, nb, f, own, other, out);
                        }
                        FaceClass::Shared => {
                            let nb = self.mesh.neighbors(e)[f].element().expect("shared faces have a neighbour");
                            let other = &ghost[e * trace_len + f * face_len..][..face_len];
                            self.interface_bracket(e, nb, f, own, other, out);
                        }
                    }
                }
            });
            timers[class.kernel()] += clock.elapsed().as_secs_f64();
        }

        let clock = Instant::now();
        rate.par_chunks_mut(elem_len)
            .zip(q.par_chunks(elem_len))
            .enumerate()
            .for_each_init(
                || VolumeScratch::new(r),
                |scratch, (e, (re, qe))| {
                    re.fill(0.0);
                    volume_loop(r, qe, h, &self.materials[e], scratch, re);
                },
            );
        timers[Kernel::VolumeLoop] += clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let brackets = &work.brackets;
        rate.par_chunks_mut(elem_len).enumerate().for_each(|(e, re)| {
            let rho = self.materials[e].rho;
            for &f in &self.face_order[e] {
                let b = &brackets[e * trace_len + f * face_len..][..face_len];
                lift(r, f, b, h, rho, re);
            }
        });
        timers[Kernel::Lift] += clock.elapsed().as_secs_f64();

        if let Some(element) = rate
            .par_chunks(elem_len)
            .position_first(|re| re.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::NonFiniteRate { element });
        }
        Ok(())
    }

    fn face_state(trace: &[f64], nf: usize, p: usize) -> WaveState {
        let c: [f64; STATE_COMPONENTS] = std::array::from_fn(|comp| trace[comp * nf + p]);
        WaveState::from_components(&c)
    }

    fn store(out: &mut [f64], nf: usize, p: usize, b: &WaveState) {
        for (comp, v) in b.to_components().iter().enumerate() {
            out[comp * nf + p] = *v;
        }
    }

    fn interface_bracket(&self, e: usize, nb: usize, f: usize, own: &[f64], other: &[f64], out: &mut [f64]) {
        let nf = self.reference.face_node_count();
        let n = face_normal(f);
        let (mm, mp) = (&self.materials[e], &self.materials[nb]);
        for p in 0..nf {
            let qm = Self::face_state(own, nf, p);
            let qp = Self::face_state(other, nf, p);
            Self::store(out, nf, p, &riemann_flux(&qm, &qp, mm, mp, &n));
        }
    }

    fn boundary_bracket(&self, e: usize, f: usize, own: &[f64], t: f64, out: &mut [f64]) {
        let nf = self.reference.face_node_count();
        let n = face_normal(f);
        let mat = &self.materials[e];
        for p in 0..nf {
            let qm = Self::face_state(own, nf, p);
            let x = self.node_position(e, self.reference.face_nodes[f][p]);
            let t_bc = self.boundary.traction(f, mat, &x, &n, t);
            Self::store(out, nf, p, &traction_bc(&qm, mat, &n, &t_bc));
        }
    }

    /// Which execution part (`2 node + is_device`) owns `element`.
    pub fn part_of(&self, element: usize) -> usize {
        self.part_of[element]
    }
}

#[cfg(test)]
mod tests;
