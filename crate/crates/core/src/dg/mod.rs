//! LGL spectral-element machinery: the reference hexahedron, the tensor
//! product derivative kernels and the RK4 integrator.

mod kernels;
mod reference;
mod rk;

pub use kernels::{aiix, iaix, iiax, interp_q, lift, volume_loop, VolumeScratch};
pub use reference::{differentiation_matrix, lagrange, lgl_nodes_weights, ReferenceElement, MAX_ORDER};
pub use rk::{cfl_time_step, rk4_step, Rk4Scratch};
