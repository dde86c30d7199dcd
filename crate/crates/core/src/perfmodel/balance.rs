use serde::{Deserialize, Serialize};

use super::{Device, DeviceProfile, KernelTimeTable, KernelTimes, TransferModel};
use crate::error::{Error, Result};
use crate::{BYTES_PER_VALUE, STATE_COMPONENTS};

/// Ideal surface of a compact `k`-element set, `6 k^{2/3}` faces.
pub fn ideal_surface(k: usize) -> f64 {
    6.0 * (k as f64).powf(2.0 / 3.0)
}

/// Bytes of one face's trace: `(N+1)² · 12 · 8`.
pub fn face_bytes(order: usize) -> f64 {
    ((order + 1).pow(2) * STATE_COMPONENTS * BYTES_PER_VALUE) as f64
}

/// Bytes of one element's volume state: `(N+1)³ · 12 · 8`.
pub fn element_bytes(order: usize) -> f64 {
    ((order + 1).pow(3) * STATE_COMPONENTS * BYTES_PER_VALUE) as f64
}

/// Per-step host–device exchange: one message each way carrying every shared
/// face. Without `surface_faces` the ideal `6 k_dev^{2/3}` is used.
pub fn pci_time(k_dev: usize, order: usize, model: &TransferModel, surface_faces: Option<f64>) -> f64 {
    let faces = surface_faces.unwrap_or_else(|| ideal_surface(k_dev));
    2.0 * model.message_time(faces * face_bytes(order))
}

/// Predicted per-step times of one node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepPrediction {
    pub t_dev: f64,
    /// Host kernel time plus the exchange.
    pub t_host: f64,
    pub pci: f64,
    pub dev_kernels: KernelTimes,
    pub host_kernels: KernelTimes,
}

impl StepPrediction {
    /// Both sides run concurrently, so the step lasts as long as the slower.
    pub fn step_time(&self) -> f64 {
        self.t_dev.max(self.t_host)
    }
}

pub fn predict_step_time(
    order: usize,
    k_dev: usize,
    k_host: usize,
    table: &KernelTimeTable,
    xfer: &TransferModel,
    surface_faces: Option<f64>,
) -> Result<StepPrediction> {
    let dev_kernels = table.kernel_times(order, Device::Device, k_dev)?;
    let host_kernels = table.kernel_times(order, Device::Host, k_host)?;
    let pci = pci_time(k_dev, order, xfer, surface_faces);
    Ok(StepPrediction { t_dev: dev_kernels.total(), t_host: host_kernels.total() + pci, pci, dev_kernels, host_kernels })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceSolution {
    pub k_dev: usize,
    pub k_host: usize,
    pub t_dev: f64,
    pub t_host: f64,
    pub residual: f64,
}

/// `f(k) = T_dev(k) - T_host(K - k)` with summed affine coefficients.
struct Residual {
    dev: (f64, f64),
    host: (f64, f64),
    k: usize,
    order: usize,
    xfer: TransferModel,
}

impl Residual {
    fn new(order: usize, k: usize, table: &KernelTimeTable, xfer: &TransferModel) -> Result<Self> {
        table.check_order(order)?;
        xfer.validate()?;
        Ok(Self { dev: table.totals(order, Device::Device)?, host: table.totals(order, Device::Host)?, k, order, xfer: *xfer })
    }

    fn times(&self, k_dev: usize, surface: Option<f64>) -> (f64, f64) {
        let t_dev = self.dev.0 + self.dev.1 * k_dev as f64;
        let t_host = self.host.0 + self.host.1 * (self.k - k_dev) as f64 + pci_time(k_dev, self.order, &self.xfer, surface);
        (t_dev, t_host)
    }

    fn f(&self, k_dev: usize) -> f64 {
        let (d, h) = self.times(k_dev, None);
        d - h
    }

    fn solution(&self, k_dev: usize, surface: Option<f64>) -> BalanceSolution {
        let (t_dev, t_host) = self.times(k_dev, surface);
        BalanceSolution { k_dev, k_host: self.k - k_dev, t_dev, t_host, residual: (t_dev - t_host).abs() }
    }
}

/// Largest `k` in `[lo, hi]` with `pred(k)`, given `pred(lo)` holds and
/// `pred` is true on a prefix.
fn last_true(lo: usize, hi: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (lo, hi);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// Integer `K_dev ∈ [0, K]` minimising `|T_dev(K_dev) - T_host(K - K_dev)|`
/// with the ideal exchange surface; ties go to the smaller `K_dev`.
///
/// With affine fits `f = T_dev - T_host` is a line minus a concave
/// `k^{2/3}` term, hence convex: it falls up to its stationary point and
/// rises after it. Each monotone piece is searched by integer bisection for
/// the sign change and the bracketing integers, piece ends and the
/// stationary neighbours are compared directly.
pub fn balance(order: usize, k: usize, table: &KernelTimeTable, xfer: &TransferModel) -> Result<BalanceSolution> {
    let r = Residual::new(order, k, table, xfer)?;
    let slope = r.dev.1 + r.host.1;
    let c = 2.0 * xfer.beta * 6.0 * face_bytes(order);
    let stationary = if c > 0.0 { (2.0 * c / (3.0 * slope)).powi(3) } else { 0.0 };
    let split = (stationary.floor().max(0.0) as usize).min(k);

    let mut candidates = vec![0, k, split, (split + 1).min(k)];
    // Falling piece [0, split].
    if r.f(0) >= 0.0 && r.f(split) <= 0.0 {
        let last = last_true(0, split, |x| r.f(x) >= 0.0);
        candidates.extend([last, (last + 1).min(split)]);
    }
    // Rising piece [split, K].
    if r.f(split) <= 0.0 && r.f(k) >= 0.0 {
        let last = last_true(split, k, |x| r.f(x) <= 0.0);
        candidates.extend([last, (last + 1).min(k)]);
    }
    let best = candidates
        .into_iter()
        .min_by(|&x, &y| r.f(x).abs().total_cmp(&r.f(y).abs()).then(x.cmp(&y)))
        .expect("candidates are never empty");
    Ok(r.solution(best, None))
}

/// Exhaustive minimiser of `|T_dev - T_host|` over every integer split. With
/// `surface` given, the exchange uses `surface(k_dev)` faces instead of the
/// ideal estimate.
pub fn balance_exhaustive(
    order: usize,
    k: usize,
    table: &KernelTimeTable,
    xfer: &TransferModel,
    surface: Option<&dyn Fn(usize) -> f64>,
) -> Result<BalanceSolution> {
    let r = Residual::new(order, k, table, xfer)?;
    let mut best = r.solution(0, surface.map(|s| s(0)));
    for k_dev in 1..=k {
        let cand = r.solution(k_dev, surface.map(|s| s(k_dev)));
        if cand.residual < best.residual {
            best = cand;
        }
    }
    Ok(best)
}

/// A uniform device profile under which the balance point at `(order, k)`
/// sits at `K_dev = round(k · ratio / (1 + ratio))`: the device factor `s`
/// solves `s · T_host(K_dev) = T_host(K - K_dev) + pci(K_dev)`.
pub fn invert_profile_for_ratio(
    order: usize,
    k: usize,
    ratio: f64,
    host: &KernelTimeTable,
    transfer: TransferModel,
) -> Result<DeviceProfile> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidConfig(format!("ratio must be positive, got {ratio}")));
    }
    transfer.validate()?;
    let (a, b) = host.totals(order, Device::Host)?;
    let k_dev = (k as f64 * ratio / (1.0 + ratio)).round() as usize;
    if k_dev == 0 || k_dev >= k {
        return Err(Error::InvalidConfig(format!("ratio {ratio} leaves no elements on one side of {k}")));
    }
    let rhs = a + b * (k - k_dev) as f64 + pci_time(k_dev, order, &transfer, None);
    let factor = rhs / (a + b * k_dev as f64);
    Ok(DeviceProfile::uniform(&format!("ratio-{ratio}"), factor, transfer))
}
