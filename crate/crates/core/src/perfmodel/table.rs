use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Kernel, KernelTimes};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Device {
    Host,
    Device,
}

impl fmt::Display for Device {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Device::Host => "host",
            Device::Device => "device",
        })
    }
}

/// Affine host–device link cost `alpha + beta · bytes` per transfer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferModel {
    /// Latency in seconds.
    pub alpha: f64,
    /// Inverse bandwidth in seconds per byte.
    pub beta: f64,
}

impl TransferModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite() && self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "transfer model needs alpha >= 0 and beta > 0, got alpha = {}, beta = {}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }

    pub fn message_time(&self, bytes: f64) -> f64 {
        self.alpha + self.beta * bytes
    }
}

/// Synthetic accelerator: per-kernel time multipliers relative to the
/// calibrated host (0.4 means the device needs 40% of the host's time) and
/// the link to its host.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceProfile {
    pub name: String,
    #[serde(default)]
    pub time_factors: BTreeMap<Kernel, f64>,
    /// Multiplier for kernels missing from `time_factors`.
    #[serde(default = "one")]
    pub default_factor: f64,
    pub transfer: TransferModel,
}

fn one() -> f64 {
    1.0
}

impl DeviceProfile {
    pub fn uniform(name: &str, factor: f64, transfer: TransferModel) -> Self {
        Self { name: name.into(), time_factors: BTreeMap::new(), default_factor: factor, transfer }
    }

    pub fn factor(&self, kernel: Kernel) -> f64 {
        self.time_factors.get(&kernel).copied().unwrap_or(self.default_factor)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = std::iter::once(self.default_factor)
            .chain(self.time_factors.values().copied())
            .any(|f| !(f > 0.0 && f.is_finite()));
        if bad {
            return Err(Error::InvalidConfig(format!("profile `{}` has a non-positive time factor", self.name)));
        }
        self.transfer.validate()
    }
}

/// One fitted `time(K) = a + b K` line, in seconds per time step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub kernel: Kernel,
    #[serde(rename = "N")]
    pub order: usize,
    pub device: Device,
    pub a: f64,
    pub b: f64,
    pub r2: f64,
    /// Set when the fit needed outlier rejection.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub flagged: bool,
}

impl TableEntry {
    pub fn eval(&self, k: f64) -> f64 {
        self.a + self.b * k
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelTimeTable {
    pub entries: Vec<TableEntry>,
    pub transfer: TransferModel,
}

impl KernelTimeTable {
    pub fn from_json(text: &str) -> Result<Self> {
        let table: Self = serde_json::from_str(text)?;
        table.validate()?;
        Ok(table)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tables always serialize")
    }

    pub fn validate(&self) -> Result<()> {
        self.transfer.validate()?;
        for e in &self.entries {
            if !(e.b > 0.0 && e.b.is_finite() && e.a.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{} at N = {} on {} has slope b = {}; every fit needs b > 0",
                    e.kernel, e.order, e.device, e.b
                )));
            }
        }
        Ok(())
    }

    pub fn entry(&self, kernel: Kernel, order: usize, device: Device) -> Result<&TableEntry> {
        self.entries
            .iter()
            .find(|e| e.kernel == kernel && e.order == order && e.device == device)
            .ok_or_else(|| Error::MissingCalibration { kernel: kernel.to_string(), order, device: device.to_string() })
    }

    /// Fails unless all seven kernels are present for both devices at `order`.
    pub fn check_order(&self, order: usize) -> Result<()> {
        for device in [Device::Host, Device::Device] {
            for k in Kernel::ALL {
                self.entry(k, order, device)?;
            }
        }
        Ok(())
    }

    pub fn orders(&self) -> Vec<usize> {
        let mut o: Vec<usize> = self.entries.iter().map(|e| e.order).collect();
        o.sort_unstable();
        o.dedup();
        o
    }

    pub fn kernel_times(&self, order: usize, device: Device, k: usize) -> Result<KernelTimes> {
        let mut t = KernelTimes::default();
        for kernel in Kernel::ALL {
            t[kernel] = self.entry(kernel, order, device)?.eval(k as f64);
        }
        Ok(t)
    }

    /// Summed `a` and `b` over all kernels.
    pub fn totals(&self, order: usize, device: Device) -> Result<(f64, f64)> {
        let mut sum = (0.0, 0.0);
        for kernel in Kernel::ALL {
            let e = self.entry(kernel, order, device)?;
            sum.0 += e.a;
            sum.1 += e.b;
        }
        Ok(sum)
    }

    /// Replace the device entries by the host entries scaled with
    /// `profile`, and take the profile's link as the transfer model.
    pub fn with_device_profile(&self, profile: &DeviceProfile) -> Result<Self> {
        profile.validate()?;
        let mut entries: Vec<TableEntry> = self.entries.iter().filter(|e| e.device == Device::Host).cloned().collect();
        let scaled: Vec<TableEntry> = entries
            .iter()
            .map(|e| {
                let f = profile.factor(e.kernel);
                TableEntry { device: Device::Device, a: f * e.a, b: f * e.b, ..e.clone() }
            })
            .collect();
        entries.extend(scaled);
        Ok(Self { entries, transfer: profile.transfer })
    }

    /// Multiply every time and the transfer cost by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|e| TableEntry { a: c * e.a, b: c * e.b, ..e.clone() }).collect(),
            transfer: TransferModel { alpha: c * self.transfer.alpha, beta: c * self.transfer.beta },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn host_table(order: usize) -> KernelTimeTable {
        let entries = Kernel::ALL
            .iter()
            .enumerate()
            .map(|(i, &kernel)| TableEntry {
                kernel,
                order,
                device: Device::Host,
                a: 1e-4 * (i + 1) as f64,
                b: 1e-6 * (i + 2) as f64,
                r2: 1.0,
                flagged: false,
            })
            .collect();
        KernelTimeTable { entries, transfer: TransferModel { alpha: 1e-5, beta: 1e-10 } }
    }

    #[test]
    fn profile_scaling_defines_device_entries() {
        let profile = DeviceProfile::uniform("half", 0.4, TransferModel { alpha: 2e-5, beta: 2e-10 });
        let t = host_table(3).with_device_profile(&profile).unwrap();
        t.check_order(3).unwrap();
        for k in Kernel::ALL {
            let h = t.entry(k, 3, Device::Host).unwrap();
            let d = t.entry(k, 3, Device::Device).unwrap();
            assert_eq!(d.a, 0.4 * h.a);
            assert_eq!(d.b, 0.4 * h.b);
        }
        assert_eq!(t.transfer, profile.transfer);
    }

    #[test]
    fn per_kernel_factors_override_default() {
        let mut profile = DeviceProfile::uniform("p", 0.5, TransferModel { alpha: 0.0, beta: 1e-9 });
        profile.time_factors.insert(Kernel::Rk, 2.0);
        assert_eq!(profile.factor(Kernel::Rk), 2.0);
        assert_eq!(profile.factor(Kernel::Lift), 0.5);
        profile.time_factors.insert(Kernel::Lift, 0.0);
        assert!(profile.validate().is_err());
    }

    #[test]
    fn missing_calibration_is_explicit() {
        let t = host_table(3);
        match t.check_order(3) {
            Err(Error::MissingCalibration { device, .. }) => assert_eq!(device, "device"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(t.entry(Kernel::Lift, 4, Device::Host), Err(Error::MissingCalibration { order: 4, .. })));
    }

    #[test]
    fn json_schema() {
        let profile = DeviceProfile::uniform("p", 0.5, TransferModel { alpha: 0.0, beta: 1e-9 });
        let t = host_table(2).with_device_profile(&profile).unwrap();
        let text = t.to_json();
        assert!(text.contains("\"N\": 2"));
        assert!(text.contains("\"kernel\": \"volume_loop\""));
        assert!(text.contains("\"device\": \"device\""));
        assert!(!text.contains("flagged"));
        assert_eq!(KernelTimeTable::from_json(&text).unwrap(), t);

        let bad = text.replacen("\"b\": 2e-6", "\"b\": -1.0", 1);
        assert_ne!(bad, text);
        assert!(KernelTimeTable::from_json(&bad).is_err());

        let p: DeviceProfile = serde_json::from_str(
            r#"{"name": "mic", "time_factors": {"volume_loop": 0.3}, "transfer": {"alpha": 1e-5, "beta": 1e-10}}"#,
        )
        .unwrap();
        assert_eq!(p.factor(Kernel::VolumeLoop), 0.3);
        assert_eq!(p.factor(Kernel::IntFlux), 1.0);
    }
}
