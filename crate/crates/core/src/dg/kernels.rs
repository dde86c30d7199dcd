//! Element-local kernels. Element fields are stored component-major: the
//! `(N+1)³` nodal values of component `c` occupy `c * np .. (c + 1) * np`.
//! Face traces are stored face-major, then component, then face node.

use super::ReferenceElement;
use crate::error::{Error, Result};
use crate::physics::{strain_index, velocity_index, Material};
use crate::STATE_COMPONENTS;

/// Apply the `m × m` row-major matrix `a` along `axis` of an `m³` tensor:
/// `out[.., l, ..] = Σ_k a[l][k] u[.., k, ..]`.
fn apply_axis(a: &[f64], m: usize, axis: usize, u: &[f64], out: &mut [f64]) {
    match axis {
        0 => {
            for (urow, orow) in u.chunks_exact(m).zip(out.chunks_exact_mut(m)) {
                for (l, o) in orow.iter_mut().enumerate() {
                    let arow = &a[l * m..(l + 1) * m];
                    *o = arow.iter().zip(urow).map(|(x, y)| x * y).sum();
                }
            }
        }
        1 => {
            let plane = m * m;
            for (up, op) in u.chunks_exact(plane).zip(out.chunks_exact_mut(plane)) {
                for l in 0..m {
                    let orow = &mut op[l * m..(l + 1) * m];
                    orow.fill(0.0);
                    for k in 0..m {
                        let c = a[l * m + k];
                        for (o, x) in orow.iter_mut().zip(&up[k * m..(k + 1) * m]) {
                            *o += c * x;
                        }
                    }
                }
            }
        }
        _ => {
            let plane = m * m;
            for l in 0..m {
                let oplane = &mut out[l * plane..(l + 1) * plane];
                oplane.fill(0.0);
                for k in 0..m {
                    let c = a[l * m + k];
                    for (o, x) in oplane.iter_mut().zip(&u[k * plane..(k + 1) * plane]) {
                        *o += c * x;
                    }
                }
            }
        }
    }
}

fn checked_axis(reference: &ReferenceElement, axis: usize, u: &[f64], out: &mut [f64]) -> Result<()> {
    let np = reference.volume_nodes();
    for len in [u.len(), out.len()] {
        if len != np {
            return Err(Error::DimensionMismatch { expected: np, actual: len });
        }
    }
    apply_axis(&reference.diff, reference.m(), axis, u, out);
    Ok(())
}

/// `(I ⊗ I ⊗ D) u`: differentiate along r1.
pub fn iiax(reference: &ReferenceElement, u: &[f64], out: &mut [f64]) -> Result<()> {
    checked_axis(reference, 0, u, out)
}

/// `(I ⊗ D ⊗ I) u`: differentiate along r2.
pub fn iaix(reference: &ReferenceElement, u: &[f64], out: &mut [f64]) -> Result<()> {
    checked_axis(reference, 1, u, out)
}

/// `(D ⊗ I ⊗ I) u`: differentiate along r3.
pub fn aiix(reference: &ReferenceElement, u: &[f64], out: &mut [f64]) -> Result<()> {
    checked_axis(reference, 2, u, out)
}

/// Scratch space for [`volume_loop`], sized for one element.
#[derive(Clone, Debug)]
pub struct VolumeScratch {
    stress: Vec<f64>,
    deriv: Vec<f64>,
}

impl VolumeScratch {
    pub fn new(reference: &ReferenceElement) -> Self {
        let np = reference.volume_nodes();
        Self { stress: vec![0.0; 9 * np], deriv: vec![0.0; np] }
    }
}

/// Accumulate the volume term `-Q⁻¹ J⁻¹ Σ_i ∂_{r_i} (J a^i · F q)` of an affine
/// cubic element with edge `h` into `rate`.
///
/// Only the non-zero flux entries are differentiated: along axis `i`, the
/// three velocity components feed the strain rate and column `i` of the
/// stress feeds the velocity rate.
pub fn volume_loop(
    reference: &ReferenceElement,
    q: &[f64],
    h: f64,
    mat: &Material,
    scratch: &mut VolumeScratch,
    rate: &mut [f64],
) {
    let np = reference.volume_nodes();
    let m = reference.m();
    let d = &reference.diff;
    let scale = 2.0 / h;

    let VolumeScratch { stress, deriv } = scratch;
    for node in 0..np {
        let tr = q[strain_index(0, 0) * np + node] + q[strain_index(1, 1) * np + node] + q[strain_index(2, 2) * np + node];
        for c in 0..9 {
            stress[c * np + node] = 2.0 * mat.mu * q[c * np + node];
        }
        for i in 0..3 {
            stress[strain_index(i, i) * np + node] += mat.lambda * tr;
        }
    }

    for axis in 0..3 {
        for i in 0..3 {
            let v = &q[velocity_index(i) * np..(velocity_index(i) + 1) * np];
            apply_axis(d, m, axis, v, deriv);
            if i == axis {
                let r = &mut rate[strain_index(i, i) * np..(strain_index(i, i) + 1) * np];
                for (r, dv) in r.iter_mut().zip(deriv.iter()) {
                    *r += scale * dv;
                }
            } else {
                let half = 0.5 * scale;
                for c in [strain_index(i, axis), strain_index(axis, i)] {
                    for (r, dv) in rate[c * np..(c + 1) * np].iter_mut().zip(deriv.iter()) {
                        *r += half * dv;
                    }
                }
            }

            let s = &stress[strain_index(i, axis) * np..(strain_index(i, axis) + 1) * np];
            apply_axis(d, m, axis, s, deriv);
            let f = scale / mat.rho;
            let c = velocity_index(i);
            for (r, ds) in rate[c * np..(c + 1) * np].iter_mut().zip(deriv.iter()) {
                *r += f * ds;
            }
        }
    }
}

/// Gather volume values onto the six faces. With LGL collocation the trace
/// is an exact restriction, so no interpolation matrix is needed.
pub fn interp_q(reference: &ReferenceElement, q: &[f64], traces: &mut [f64]) {
    let np = reference.volume_nodes();
    let nf = reference.face_node_count();
    for (face, ids) in reference.face_nodes.iter().enumerate() {
        for c in 0..STATE_COMPONENTS {
            let base = (face * STATE_COMPONENTS + c) * nf;
            let vol = &q[c * np..(c + 1) * np];
            for (slot, &id) in traces[base..base + nf].iter_mut().zip(ids) {
                *slot = vol[id];
            }
        }
    }
}

/// Scatter one face's bracket `n · [(F q)* - F q]` (component-major, `12 M²`
/// values) onto the element's boundary nodes:
/// `rate -= Q⁻¹ (2 / h) bracket / w_end`.
///
/// The face quadrature weights cancel against the diagonal mass matrix,
/// leaving only the 1D end weight of the normal direction.
pub fn lift(reference: &ReferenceElement, face: usize, bracket: &[f64], h: f64, rho: f64, rate: &mut [f64]) {
    let np = reference.volume_nodes();
    let nf = reference.face_node_count();
    let w_end = reference.weights[0];
    let ids = &reference.face_nodes[face];
    for c in 0..STATE_COMPONENTS {
        let q_inv = if c < 9 { 1.0 } else { 1.0 / rho };
        let f = q_inv * 2.0 / (h * w_end);
        let b = &bracket[c * nf..(c + 1) * nf];
        let r = &mut rate[c * np..(c + 1) * np];
        for (&id, &v) in ids.iter().zip(b) {
            r[id] -= f * v;
        }
    }
}
