//! Closed-form one-dimensional P-wave solutions used for initial data,
//! analytic boundary traction and accuracy checks.

use serde::{Deserialize, Serialize};

use crate::physics::{Material, Vec3, WaveState};

/// Scalar wave profile `f(s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `amplitude · exp(-(s - center)² / (2 width²))`.
    Gaussian { amplitude: f64, center: f64, width: f64 },
    /// `amplitude · sin(2π s / wavelength + phase)`.
    Sine {
        amplitude: f64,
        wavelength: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `Σ_k coeffs[k] s^k`.
    Polynomial { coeffs: Vec<f64> },
}

impl Profile {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Profile::Gaussian { amplitude, center, width } => {
                let z = (s - center) / width;
                amplitude * (-0.5 * z * z).exp()
            }
            Profile::Sine { amplitude, wavelength, phase } => {
                amplitude * (2.0 * std::f64::consts::PI * s / wavelength + phase).sin()
            }
            Profile::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c),
        }
    }
}

/// Pure P-wave along `axis` carrying strain `e` and velocity `v` in the
/// `(axis, axis)` and `axis` slots.
fn p_state(axis: usize, e: f64, v: f64) -> WaveState {
    let mut s = WaveState::default();
    s.e[axis][axis] = e;
    s.v[axis] = v;
    s
}

/// Analytic solutions of the full 3D system that depend on one coordinate.
#[derive(Clone, Debug, PartialEq)]
pub enum ExactSolution {
    /// Plane P-wave in a homogeneous medium. The strain is
    /// `f(x_axis - c t)` (or `f(x_axis + c t)` when travelling backwards)
    /// and the velocity is `∓c` times the strain.
    PlaneWave { material: Material, axis: usize, forward: bool, profile: Profile },
    /// A P-wave `f(x - c₁ t)` travelling in +x through `left` hits the plane
    /// `x = position`. `right = None` is a traction-free wall; otherwise the
    /// wave is partly transmitted into `right`.
    Interface { left: Material, right: Option<Material>, position: f64, profile: Profile },
}

impl ExactSolution {
    pub fn state(&self, x: &Vec3, t: f64) -> WaveState {
        match self {
            ExactSolution::PlaneWave { material, axis, forward, profile } => {
                let c = material.cp();
                let (s, sign) = if *forward { (x[*axis] - c * t, -1.0) } else { (x[*axis] + c * t, 1.0) };
                let e = profile.eval(s);
                p_state(*axis, e, sign * c * e)
            }
            ExactSolution::Interface { left, right, position, profile } => {
                let a = *position;
                let c1 = left.cp();
                // Incident velocity arriving at the interface at time `tau`.
                let arrival = |tau: f64| -c1 * profile.eval(a - c1 * tau);
                let (tv, rv) = velocity_coefficients(left, right.as_ref());
                if x[0] <= a {
                    let e_inc = profile.eval(x[0] - c1 * t);
                    let v_ref = rv * arrival(t - (a - x[0]) / c1);
                    p_state(0, e_inc + v_ref / c1, -c1 * e_inc + v_ref)
                } else {
                    match right {
                        Some(m2) => {
                            let c2 = m2.cp();
                            let v = tv * arrival(t - (x[0] - a) / c2);
                            p_state(0, -v / c2, v)
                        }
                        None => WaveState::default(),
                    }
                }
            }
        }
    }
}

/// Normal-incidence velocity transmission and reflection coefficients
/// `(2 Z₁ / (Z₁ + Z₂), (Z₁ - Z₂) / (Z₁ + Z₂))` with `Z = ρ c_p`; a free wall
/// has `Z₂ = 0`.
pub fn velocity_coefficients(left: &Material, right: Option<&Material>) -> (f64, f64) {
    let z1 = left.zp();
    let z2 = right.map_or(0.0, Material::zp);
    (2.0 * z1 / (z1 + z2), (z1 - z2) / (z1 + z2))
}
