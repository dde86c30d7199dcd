use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Boundary, Discretization, ExactSolution, Profile, Snapshot, Workspace};
use crate::dg::{cfl_time_step, rk4_step, Rk4Scratch};
use crate::error::{Error, Result};
use crate::mesh::{build_mesh, MeshConfig};
use crate::partition::{nested_partition, splice, FractionBalancer, NestedPartition, RatioBalancer};
use crate::perfmodel::{Kernel, KernelTimes};
use crate::physics::{Material, MaterialSpec, Vec3, WaveState};

fn default_cfl() -> f64 {
    0.5
}

fn default_steps() -> usize {
    118
}

fn default_direction() -> Vec3 {
    [1.0, 0.0, 0.0]
}

fn default_true() -> bool {
    true
}

/// Initial data. Plane waves assume a homogeneous medium; `interface`
/// uses material 0 left of `position` and material 1 right of it;
/// `free_surface` uses material 0 with a traction-free wall at `position`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Zero,
    /// Velocity pulse `amplitude · direction · exp(-|x - center|² / (2 width²))`.
    Gaussian {
        center: Vec3,
        width: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_direction")]
        direction: Vec3,
    },
    /// Uniform random nodal values (symmetric strain).
    Random {
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    PlaneWave {
        axis: usize,
        #[serde(default = "default_true")]
        forward: bool,
        profile: Profile,
    },
    Interface { position: f64, profile: Profile },
    FreeSurface { position: f64, profile: Profile },
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TractionKind {
    /// `t_bc = 0` everywhere.
    #[default]
    Free,
    /// Traction of the analytic solution named by the initial condition.
    Exact,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    #[serde(default)]
    pub traction: TractionKind,
    /// Outward face directions (0 = -x, 1 = +x, ..., 5 = +z) kept traction
    /// free under `exact`.
    #[serde(default)]
    pub free_directions: Vec<usize>,
}

/// Optional nested partition for the run. With neither `ratio` nor
/// `fraction` every node keeps all its elements on the host.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    pub nodes: usize,
    #[serde(default)]
    pub ratio: Option<f64>,
    #[serde(default)]
    pub fraction: Option<f64>,
}

impl PartitionConfig {
    pub fn build(&self, mesh: &crate::mesh::Mesh) -> Result<NestedPartition> {
        match (self.ratio, self.fraction) {
            (Some(_), Some(_)) => Err(Error::InvalidConfig("give either a ratio or a fraction, not both".into())),
            (Some(r), None) => {
                if !(r >= 0.0 && r.is_finite()) {
                    return Err(Error::InvalidConfig(format!("ratio must be finite and non-negative, got {r}")));
                }
                nested_partition(mesh, self.nodes, &RatioBalancer(r))
            }
            (None, Some(f)) => {
                if !(0.0..=1.0).contains(&f) {
                    return Err(Error::InvalidConfig(format!("fraction must lie in [0, 1], got {f}")));
                }
                nested_partition(mesh, self.nodes, &FractionBalancer(f))
            }
            (None, None) => Ok(NestedPartition::host_only(splice(mesh, self.nodes)?)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub order: usize,
    pub mesh: MeshConfig,
    /// Indexed by tree material id.
    pub materials: Vec<MaterialSpec>,
    /// Fixed time step; when absent the CFL rule with `cfl` is used.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    pub initial: InitialCondition,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    /// Write a snapshot every this many steps (0 writes only the final one).
    #[serde(default)]
    pub output_every: usize,
    #[serde(default)]
    pub partition: Option<PartitionConfig>,
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
            }
        }
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return Err(Error::InvalidConfig(format!("cfl must be positive, got {}", self.cfl)));
        }
        if self.boundary.free_directions.iter().any(|&d| d >= 6) {
            return Err(Error::InvalidConfig("free directions are face indices 0..=5".into()));
        }
        Ok(())
    }

    fn material_table(&self) -> Result<Vec<Material>> {
        self.materials.iter().map(|&m| Material::try_from(m)).collect()
    }

    fn exact_solution(&self, materials: &[Material]) -> Result<Option<ExactSolution>> {
        let get = |i: usize| {
            materials
                .get(i)
                .copied()
                .ok_or_else(|| Error::InvalidConfig(format!("initial condition needs material {i}")))
        };
        Ok(match &self.initial {
            InitialCondition::PlaneWave { axis, forward, profile } => {
                if *axis > 2 {
                    return Err(Error::InvalidConfig(format!("axis must be 0, 1 or 2, got {axis}")));
                }
                let material = get(0)?;
                let used: Vec<usize> = self.mesh.trees.iter().map(|t| t.material_id).collect();
                if used.iter().any(|&id| materials.get(id) != Some(&material)) {
                    return Err(Error::InvalidConfig("plane waves need a homogeneous medium".into()));
                }
                Some(ExactSolution::PlaneWave { material, axis: *axis, forward: *forward, profile: profile.clone() })
            }
            InitialCondition::Interface { position, profile } => Some(ExactSolution::Interface {
                left: get(0)?,
                right: Some(get(1)?),
                position: *position,
                profile: profile.clone(),
            }),
            InitialCondition::FreeSurface { position, profile } => Some(ExactSolution::Interface {
                left: get(0)?,
                right: None,
                position: *position,
                profile: profile.clone(),
            }),
            _ => None,
        })
    }
}

/// A discretization plus the evolving state.
pub struct Simulation {
    pub disc: Discretization,
    pub exact: Option<ExactSolution>,
    pub q: Vec<f64>,
    pub time: f64,
    pub step: usize,
    pub dt: f64,
    pub timers: KernelTimes,
    work: Workspace,
    scratch: Rk4Scratch,
}

impl Simulation {
    /// Build the mesh, partition and initial state. Nothing is written.
    pub fn new(config: &SolveConfig) -> Result<(Self, Vec<String>)> {
        config.validate()?;
        let materials = config.material_table()?;
        let mesh = build_mesh(&config.mesh)?;
        let partition = config.partition.as_ref().map(|p| p.build(&mesh)).transpose()?;
        let exact = config.exact_solution(&materials)?;
        let boundary = match config.boundary.traction {
            TractionKind::Free => Boundary::free(),
            TractionKind::Exact => {
                let Some(sol) = exact.clone() else {
                    return Err(Error::InvalidConfig(
                        "exact boundary traction needs a plane_wave, interface or free_surface initial condition".into(),
                    ));
                };
                Boundary { exact: Some(sol), free_directions: config.boundary.free_directions.clone() }
            }
        };
        let disc = Discretization::new(mesh, config.order, &materials, boundary, partition.as_ref())?;

        let h = disc.mesh().element_size();
        let stable = cfl_time_step(config.cfl, h, disc.max_speed(), config.order);
        let mut warnings = Vec::new();
        let dt = match config.dt {
            Some(dt) => {
                if dt > stable {
                    warnings.push(format!(
                        "dt = {dt:e} exceeds the CFL limit {stable:e} (C = {}, h = {h}, c_max = {})",
                        config.cfl,
                        disc.max_speed()
                    ));
                }
                dt
            }
            None => stable,
        };

        let q = initial_state(&disc, &config.initial, exact.as_ref());
        let sim = Self {
            disc,
            exact,
            q,
            time: 0.0,
            step: 0,
            dt,
            timers: KernelTimes::default(),
            work: Workspace::default(),
            scratch: Rk4Scratch::default(),
        };
        Ok((sim, warnings))
    }

    /// Wrap an existing discretization and state.
    pub fn from_parts(disc: Discretization, q: Vec<f64>, dt: f64) -> Self {
        Self {
            disc,
            exact: None,
            q,
            time: 0.0,
            step: 0,
            dt,
            timers: KernelTimes::default(),
            work: Workspace::default(),
            scratch: Rk4Scratch::default(),
        }
    }

    /// One RK4 step. Time outside the right-hand side is charged to `rk`.
    pub fn advance(&mut self) -> Result<()> {
        let clock = Instant::now();
        let before = self.timers.total();
        let Self { disc, q, time, step, dt, timers, work, scratch, .. } = self;
        rk4_step(q, *time, *dt, *step, scratch, |t, y, out| disc.rhs(t, y, out, work, timers))?;
        let rhs_time = self.timers.total() - before;
        self.timers[Kernel::Rk] += (clock.elapsed().as_secs_f64() - rhs_time).max(0.0);
        self.step += 1;
        self.time = self.step as f64 * self.dt;
        Ok(())
    }

    pub fn energy(&self) -> f64 {
        self.disc.energy(&self.q)
    }

    /// Relative L² error against the analytic solution at the current time.
    pub fn l2_error(&self) -> Option<f64> {
        let exact = self.exact.as_ref()?;
        let target = self.disc.project(|x| exact.state(x, self.time));
        let diff: Vec<f64> = self.q.iter().zip(&target).map(|(a, b)| a - b).collect();
        let (err, norm) = (self.disc.energy(&diff), self.disc.energy(&target));
        Some((err / norm).sqrt())
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot::from_element_major(self.disc.order(), self.disc.element_count(), &self.q)
    }
}

fn initial_state(disc: &Discretization, ic: &InitialCondition, exact: Option<&ExactSolution>) -> Vec<f64> {
    match ic {
        InitialCondition::Zero => vec![0.0; disc.state_len()],
        InitialCondition::Gaussian { center, width, amplitude, direction } => disc.project(|x| {
            let r2: f64 = (0..3).map(|a| (x[a] - center[a]).powi(2)).sum();
            let g = amplitude * (-0.5 * r2 / (width * width)).exp();
            WaveState { e: [[0.0; 3]; 3], v: direction.map(|d| d * g) }
        }),
        InitialCondition::Random { seed, amplitude } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let np = disc.reference().volume_nodes();
            let mut q: Vec<f64> = (0..disc.state_len()).map(|_| amplitude * rng.gen_range(-1.0..1.0)).collect();
            for block in q.chunks_exact_mut(disc.element_len()) {
                for node in 0..np {
                    for i in 0..3 {
                        for j in 0..i {
                            block[(3 * i + j) * np + node] = block[(3 * j + i) * np + node];
                        }
                    }
                }
            }
            q
        }
        _ => {
            let sol = exact.expect("analytic initial conditions carry an exact solution");
            disc.project(|x| sol.state(x, 0.0))
        }
    }
}

/// Outcome of [`run`].
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub energies: Vec<(usize, f64, f64)>,
    pub timers: KernelTimes,
    pub elements: usize,
    pub order: usize,
    pub warnings: Vec<String>,
    pub final_state: Vec<f64>,
    pub snapshots: Vec<String>,
}

impl RunSummary {
    pub fn energy_csv(&self) -> String {
        let mut s = String::from("step,time,energy\n");
        for (step, time, e) in &self.energies {
            let _ = writeln!(s, "{step},{time:e},{e:e}");
        }
        s
    }

    pub fn kernel_times_csv(&self) -> String {
        let mut s = String::from("kernel,N,K,seconds\n");
        for (k, secs) in self.timers.iter() {
            let _ = writeln!(s, "{k},{},{},{secs:e}", self.order, self.elements);
        }
        s
    }
}

/// Run the configured solve. With `out` set, writes `energy.csv`,
/// `kernel_times.csv` and `snapshot_<step>.bin` files there.
pub fn run(config: &SolveConfig, out: Option<&Path>) -> Result<RunSummary> {
    let (mut sim, warnings) = Simulation::new(config)?;
    let mut energies = vec![(0, 0.0, sim.energy())];
    let mut snapshots = Vec::new();
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    let mut save = |sim: &Simulation| -> Result<()> {
        if let Some(dir) = out {
            let name = format!("snapshot_{:06}.bin", sim.step);
            fs::write(dir.join(&name), sim.snapshot().to_bytes())?;
            snapshots.push(name);
        }
        Ok(())
    };
    for _ in 0..config.steps {
        sim.advance()?;
        energies.push((sim.step, sim.time, sim.energy()));
        if config.output_every > 0 && sim.step % config.output_every == 0 {
            save(&sim)?;
        }
    }
    if config.output_every == 0 || sim.step % config.output_every != 0 {
        save(&sim)?;
    }
    let summary = RunSummary {
        energies,
        timers: sim.timers,
        elements: sim.disc.element_count(),
        order: sim.disc.order(),
        warnings,
        final_state: sim.q,
        snapshots,
    };
    if let Some(dir) = out {
        fs::write(dir.join("energy.csv"), summary.energy_csv())?;
        fs::write(dir.join("kernel_times.csv"), summary.kernel_times_csv())?;
    }
    Ok(summary)
}
