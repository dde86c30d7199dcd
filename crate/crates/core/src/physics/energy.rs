use super::{constitutive, Material, WaveState};
use crate::dg::ReferenceElement;
use crate::STATE_COMPONENTS;

/// Pointwise energy `rho |v|² / 2 + E : C E / 2`.
pub fn energy_density(state: &WaveState, mat: &Material) -> f64 {
    let s = constitutive(mat, &state.e);
    let mut strain = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            strain += state.e[i][j] * s[i][j];
        }
    }
    let kinetic = state.v.iter().map(|v| v * v).sum::<f64>();
    0.5 * mat.rho * kinetic + 0.5 * strain
}

/// Total energy of element-major nodal fields (`12 (N+1)³` values per
/// element) on cubic elements of edge `h`, integrated with LGL quadrature.
pub fn energy(fields: &[f64], materials: &[Material], reference: &ReferenceElement, h: f64) -> f64 {
    let np = reference.volume_nodes();
    let stride = STATE_COMPONENTS * np;
    let jac = (0.5 * h).powi(3);
    let mut comps = [0.0; STATE_COMPONENTS];
    fields
        .chunks_exact(stride)
        .zip(materials)
        .map(|(elem, mat)| {
            let mut sum = 0.0;
            for node in 0..np {
                for (c, slot) in comps.iter_mut().enumerate() {
                    *slot = elem[c * np + node];
                }
                let q = WaveState::from_components(&comps);
                sum += reference.volume_weight(node) * energy_density(&q, mat);
            }
            sum * jac
        })
        .sum()
}
