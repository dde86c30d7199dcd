//! Nested host/accelerator partitioning for discontinuous Galerkin
//! elastic–acoustic wave propagation.
//!
//! * [`mesh`]: Morton-ordered hexahedral forests with face adjacency.
//! * [`partition`]: node splicing and interior device-set growth.
//! * [`dg`]: LGL reference element and the element kernels.
//! * [`physics`]: materials, fluxes, the exact Riemann flux and traction
//!   boundaries.
//! * [`solver`]: semi-discrete assembly and the RK4 time loop.
//! * [`perfmodel`]: kernel timing tables, transfer model and load balance.
//! * [`hetsim`]: discrete-event simulation of the host/device step cycle.
//! * [`report`]: summaries of simulation outputs.

pub mod dg;
pub mod error;
pub mod hetsim;
pub mod mesh;
pub mod partition;
pub mod perfmodel;
pub mod physics;
pub mod report;
pub mod solver;

pub use error::{Error, Result};

/// Unknowns per collocation node: nine strain entries plus three velocity
/// components.
pub const STATE_COMPONENTS: usize = 12;

/// Bytes per stored unknown.
pub const BYTES_PER_VALUE: usize = 8;
