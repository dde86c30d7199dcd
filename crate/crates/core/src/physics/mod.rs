//! Isotropic elastic–acoustic media in strain–velocity form.
//!
//! Interface conventions: the `minus` side is the element being updated and
//! `n` is its outward unit normal; the `plus` side is the neighbour (or the
//! mirrored ghost on a traction boundary).

mod energy;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use energy::{energy, energy_density};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub rho: f64,
    pub lambda: f64,
    pub mu: f64,
}

/// Wave-speed form used in configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub rho: f64,
    pub cp: f64,
    pub cs: f64,
}

impl Material {
    pub fn new(rho: f64, lambda: f64, mu: f64) -> Result<Self> {
        let ok = rho.is_finite() && lambda.is_finite() && mu.is_finite();
        if !ok || rho <= 0.0 || mu < 0.0 || lambda + 2.0 * mu <= 0.0 {
            return Err(Error::InvalidMaterial(format!(
                "rho = {rho}, lambda = {lambda}, mu = {mu} violates rho > 0, mu >= 0, lambda + 2 mu > 0"
            )));
        }
        Ok(Self { rho, lambda, mu })
    }

    /// From density and wave speeds: `mu = rho cs²`, `lambda = rho cp² - 2 mu`.
    pub fn from_speeds(rho: f64, cp: f64, cs: f64) -> Result<Self> {
        if !(cp > 0.0 && cs >= 0.0) {
            return Err(Error::InvalidMaterial(format!("wave speeds cp = {cp}, cs = {cs}")));
        }
        let mu = rho * cs * cs;
        Self::new(rho, rho * cp * cp - 2.0 * mu, mu)
    }

    pub fn acoustic(rho: f64, cp: f64) -> Result<Self> {
        Self::from_speeds(rho, cp, 0.0)
    }

    pub fn cp(&self) -> f64 {
        ((self.lambda + 2.0 * self.mu) / self.rho).sqrt()
    }

    pub fn cs(&self) -> f64 {
        (self.mu / self.rho).sqrt()
    }

    pub fn is_acoustic(&self) -> bool {
        self.mu == 0.0
    }

    /// P-wave impedance `rho cp`.
    pub fn zp(&self) -> f64 {
        self.rho * self.cp()
    }

    /// S-wave impedance `rho cs`.
    pub fn zs(&self) -> f64 {
        self.rho * self.cs()
    }
}

impl TryFrom<MaterialSpec> for Material {
    type Error = Error;

    fn try_from(s: MaterialSpec) -> Result<Self> {
        Material::from_speeds(s.rho, s.cp, s.cs)
    }
}

/// Strain tensor and velocity at a point. The strain is kept symmetric.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WaveState {
    pub e: Mat3,
    pub v: Vec3,
}

impl WaveState {
    /// Builds a state from any 3×3 matrix by taking its symmetric part.
    pub fn new(e: Mat3, v: Vec3) -> Self {
        Self { e: sym(&e), v }
    }

    /// Reads the 12 stored components: strain entry `(i, j)` at `3 j + i`,
    /// then velocity.
    pub fn from_components(c: &[f64]) -> Self {
        let mut e = [[0.0; 3]; 3];
        for (j, col) in c[..9].chunks_exact(3).enumerate() {
            for (i, &val) in col.iter().enumerate() {
                e[i][j] = val;
            }
        }
        Self { e, v: [c[9], c[10], c[11]] }
    }

    pub fn to_components(&self) -> [f64; 12] {
        let mut c = [0.0; 12];
        for j in 0..3 {
            for i in 0..3 {
                c[3 * j + i] = self.e[i][j];
            }
        }
        c[9..].copy_from_slice(&self.v);
        c
    }

    pub fn add(&self, other: &WaveState) -> WaveState {
        let mut out = *self;
        for i in 0..3 {
            for j in 0..3 {
                out.e[i][j] += other.e[i][j];
            }
            out.v[i] += other.v[i];
        }
        out
    }

    pub fn scale(&self, s: f64) -> WaveState {
        let mut out = *self;
        for i in 0..3 {
            for j in 0..3 {
                out.e[i][j] *= s;
            }
            out.v[i] *= s;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.to_components().iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Index of strain entry `(i, j)` among the 12 stored components.
pub const fn strain_index(i: usize, j: usize) -> usize {
    3 * j + i
}

/// Index of velocity component `i` among the 12 stored components.
pub const fn velocity_index(i: usize) -> usize {
    9 + i
}

fn sym(a: &Mat3) -> Mat3 {
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = 0.5 * (a[i][j] + a[j][i]);
        }
    }
    s
}

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn mat_vec(a: &Mat3, x: &Vec3) -> Vec3 {
    [dot(&a[0], x), dot(&a[1], x), dot(&a[2], x)]
}

fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// `n × (n × a)`.
fn double_cross(n: &Vec3, a: &Vec3) -> Vec3 {
    cross(n, &cross(n, a))
}

/// `sym(a ⊗ b)`.
fn sym_outer(a: &Vec3, b: &Vec3) -> Mat3 {
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = 0.5 * (a[i] * b[j] + b[i] * a[j]);
        }
    }
    s
}

/// Stress `S = lambda tr(E) I + 2 mu E`.
pub fn constitutive(mat: &Material, e: &Mat3) -> Mat3 {
    let tr = e[0][0] + e[1][1] + e[2][2];
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = 2.0 * mat.mu * e[i][j];
        }
        s[i][i] += mat.lambda * tr;
    }
    s
}

/// Flux component `(F q)_i` along `axis`: strain part
/// `-(v ⊗ e_i + e_i ⊗ v) / 2`, velocity part `-(C E) e_i`.
pub fn flux(state: &WaveState, mat: &Material, axis: usize) -> WaveState {
    let mut unit = [0.0; 3];
    unit[axis] = 1.0;
    let strain = sym_outer(&state.v, &unit);
    let s = constitutive(mat, &state.e);
    let mut out = WaveState::default();
    for i in 0..3 {
        for j in 0..3 {
            out.e[i][j] = -strain[i][j];
        }
        out.v[i] = -s[i][axis];
    }
    out
}

/// Interface jump data entering the Riemann bracket.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jumps {
    /// `[[C E]] = (S⁻ - S⁺) n`.
    pub traction: Vec3,
    /// `[[v]] = (v⁻ - v⁺) · n`.
    pub normal_velocity: f64,
    /// `v⁻ - v⁺`.
    pub velocity: Vec3,
}

impl Jumps {
    pub fn between(qm: &WaveState, qp: &WaveState, matm: &Material, matp: &Material, n: &Vec3) -> Self {
        let sm = mat_vec(&constitutive(matm, &qm.e), n);
        let sp = mat_vec(&constitutive(matp, &qp.e), n);
        let dv = [qm.v[0] - qp.v[0], qm.v[1] - qp.v[1], qm.v[2] - qp.v[2]];
        Self {
            traction: [sm[0] - sp[0], sm[1] - sp[1], sm[2] - sp[2]],
            normal_velocity: dot(&dv, n),
            velocity: dv,
        }
    }
}

/// Upwind bracket `n · [(F q)* - F q⁻]` from precomputed jumps.
pub fn bracket_from_jumps(j: &Jumps, matm: &Material, matp: &Material, n: &Vec3) -> WaveState {
    let (zpm, zpp) = (matm.zp(), matp.zp());
    let (zsm, zsp) = (matm.zs(), matp.zs());
    let k0 = 1.0 / (zpm + zpp);
    let k1 = if matm.mu != 0.0 { 1.0 / (zsm + zsp) } else { 0.0 };

    let normal = k0 * dot(n, &j.traction) + k0 * zpp * j.normal_velocity;
    let t_tan = double_cross(n, &j.traction);
    let v_tan = double_cross(n, &j.velocity);

    let nn = sym_outer(n, n);
    let st = sym_outer(n, &t_tan);
    let sv = sym_outer(n, &v_tan);
    let mut out = WaveState::default();
    for a in 0..3 {
        for b in 0..3 {
            out.e[a][b] = normal * nn[a][b] - k1 * st[a][b] - k1 * zsp * sv[a][b];
        }
        out.v[a] = normal * zpm * n[a] - k1 * zsm * t_tan[a] - k1 * zsp * zsm * v_tan[a];
    }
    out
}

/// Exact upwind bracket `n · [(F q)* - F q⁻]` between an element state `qm`
/// and its neighbour `qp`. The shear coupling `k1` vanishes whenever the
/// minus side is acoustic.
pub fn riemann_flux(qm: &WaveState, qp: &WaveState, matm: &Material, matp: &Material, n: &Vec3) -> WaveState {
    let j = Jumps::between(qm, qp, matm, matp, n);
    bracket_from_jumps(&j, matm, matp, n)
}

/// Mirror-principle jumps for a prescribed traction `t_bc`:
/// `[[v]] = v⁻ - v⁺ = 0` and `[[S]] = -2 (t_bc - S⁻ n)`.
pub fn traction_jumps(qm: &WaveState, mat: &Material, n: &Vec3, t_bc: &Vec3) -> Jumps {
    let sn = mat_vec(&constitutive(mat, &qm.e), n);
    Jumps {
        traction: [0, 1, 2].map(|i| -2.0 * (t_bc[i] - sn[i])),
        normal_velocity: 0.0,
        velocity: [0.0; 3],
    }
}

/// Bracket on a traction boundary: the ghost carries the same material.
pub fn traction_bc(qm: &WaveState, mat: &Material, n: &Vec3, t_bc: &Vec3) -> WaveState {
    bracket_from_jumps(&traction_jumps(qm, mat, n, t_bc), mat, mat, n)
}

/// Traction `S n` carried by a state.
pub fn traction(mat: &Material, state: &WaveState, n: &Vec3) -> Vec3 {
    mat_vec(&constitutive(mat, &state.e), n)
}
