use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fit_affine, Device, DeviceProfile, Kernel, KernelTimeTable, KernelTimes, TableEntry};
use crate::error::{Error, Result};
use crate::mesh::{build_mesh, MeshConfig, MAX_LEVEL, MAX_TREES};
use crate::partition::{nested_partition, FractionBalancer};
use crate::physics::Material;
use crate::solver::{Boundary, Discretization, Simulation};

/// Host seconds per time step of every kernel at one `(N, K)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub order: usize,
    pub k: usize,
    pub times: KernelTimes,
}

/// A row of at most eight trees holding exactly `k` elements, using the
/// deepest level that fits.
pub fn forest_for_count(k: usize, element_size: f64) -> Result<MeshConfig> {
    (0..=MAX_LEVEL.min(10))
        .rev()
        .find_map(|level| {
            let per_tree = 8usize.pow(level);
            (k % per_tree == 0 && (1..=MAX_TREES).contains(&(k / per_tree)))
                .then(|| MeshConfig::row(k / per_tree, level, element_size))
        })
        .ok_or_else(|| Error::InvalidConfig(format!("{k} elements is not t · 8^level for t ≤ 8 trees")))
}

/// Time the solver kernels on a `k`-element forest split over two nodes with
/// half of each node's interior offloaded, so that every kernel runs.
/// Returns the per-kernel minimum over `reps` single steps after a warm-up
/// step.
pub fn measure(order: usize, k: usize, reps: usize) -> Result<Sample> {
    let config = forest_for_count(k, 1.0)?;
    let trees = config.trees.len();
    let mesh = build_mesh(&config)?;
    let nodes = if k >= 2 { 2 } else { 1 };
    let partition = nested_partition(&mesh, nodes, &FractionBalancer(0.5))?;
    let materials = vec![Material::from_speeds(1.0, 3.0, 2.0)?; trees];
    let disc = Discretization::new(mesh, order, &materials, Boundary::free(), Some(&partition))?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let q = (0..disc.state_len()).map(|_| rng.gen_range(-1e-3..1e-3)).collect();
    let dt = 1e-3 / (order * order) as f64;
    let mut sim = Simulation::from_parts(disc, q, dt);

    sim.advance()?;
    let mut best = KernelTimes([f64::INFINITY; 7]);
    for _ in 0..reps.max(1) {
        let before = sim.timers;
        sim.advance()?;
        for kernel in Kernel::ALL {
            best[kernel] = best[kernel].min(sim.timers[kernel] - before[kernel]);
        }
    }
    Ok(Sample { order, k, times: best })
}

/// Fit host lines from samples and derive the device lines from `profile`.
pub fn table_from_samples(samples: &[Sample], profile: &DeviceProfile) -> Result<KernelTimeTable> {
    profile.validate()?;
    let mut orders: Vec<usize> = samples.iter().map(|s| s.order).collect();
    orders.sort_unstable();
    orders.dedup();
    let mut entries = Vec::new();
    for &order in &orders {
        for kernel in Kernel::ALL {
            let points: Vec<(f64, f64)> =
                samples.iter().filter(|s| s.order == order).map(|s| (s.k as f64, s.times[kernel])).collect();
            let fit = fit_affine(&points)?;
            entries.push(TableEntry {
                kernel,
                order,
                device: Device::Host,
                a: fit.a,
                b: fit.b,
                r2: fit.r2,
                flagged: fit.flagged,
            });
        }
    }
    let host = KernelTimeTable { entries, transfer: profile.transfer };
    host.with_device_profile(profile)
}

/// Measure every `(order, count)` pair on this machine and build the table.
pub fn calibrate(orders: &[usize], counts: &[usize], profile: &DeviceProfile, reps: usize) -> Result<KernelTimeTable> {
    profile.validate()?;
    let mut distinct = counts.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::TooFewSamples(distinct.len()));
    }
    for &k in &distinct {
        forest_for_count(k, 1.0)?;
    }
    let mut samples = Vec::new();
    for &order in orders {
        for &k in &distinct {
            samples.push(measure(order, k, reps)?);
        }
    }
    table_from_samples(&samples, profile)
}
