use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The profiled kernels of one right-hand-side evaluation plus the update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    VolumeLoop,
    IntFlux,
    InterpQ,
    Lift,
    Rk,
    BoundFlux,
    ParallelFlux,
}

impl Kernel {
    pub const ALL: [Kernel; 7] = [
        Kernel::VolumeLoop,
        Kernel::IntFlux,
        Kernel::InterpQ,
        Kernel::Lift,
        Kernel::Rk,
        Kernel::BoundFlux,
        Kernel::ParallelFlux,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::VolumeLoop => "volume_loop",
            Kernel::IntFlux => "int_flux",
            Kernel::InterpQ => "interp_q",
            Kernel::Lift => "lift",
            Kernel::Rk => "rk",
            Kernel::BoundFlux => "bound_flux",
            Kernel::ParallelFlux => "parallel_flux",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Kernel::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown kernel `{s}`")))
    }
}

/// One value per kernel, e.g. accumulated seconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KernelTimes(pub [f64; 7]);

impl KernelTimes {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Kernel, f64)> + '_ {
        Kernel::ALL.into_iter().map(|k| (k, self[k]))
    }
}

impl Index<Kernel> for KernelTimes {
    type Output = f64;

    fn index(&self, k: Kernel) -> &f64 {
        &self.0[k.index()]
    }
}

impl IndexMut<Kernel> for KernelTimes {
    fn index_mut(&mut self, k: Kernel) -> &mut f64 {
        &mut self.0[k.index()]
    }
}

impl Add for KernelTimes {
    type Output = KernelTimes;

    fn add(mut self, rhs: KernelTimes) -> KernelTimes {
        self += rhs;
        self
    }
}

impl AddAssign for KernelTimes {
    fn add_assign(&mut self, rhs: KernelTimes) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}
