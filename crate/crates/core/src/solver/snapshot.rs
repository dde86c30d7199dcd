//! Flat binary nodal snapshots.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `DGAE` |
//! | 4     | `u32` format version |
//! | 4     | `u32` order `N` |
//! | 8     | `u64` element count `K` |
//! | rest  | `f64` values, component-major: for each of the 12 components, every element's `(N+1)³` nodes |

use std::path::Path;

use crate::error::{Error, Result};
use crate::STATE_COMPONENTS;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"DGAE";
pub const SNAPSHOT_VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub order: u32,
    pub elements: u64,
    /// Component-major values.
    pub values: Vec<f64>,
}

impl Snapshot {
    /// Reorder an element-major solver state into component-major layout.
    pub fn from_element_major(order: usize, elements: usize, q: &[f64]) -> Self {
        let np = (order + 1).pow(3);
        let mut values = Vec::with_capacity(q.len());
        for c in 0..STATE_COMPONENTS {
            for e in 0..elements {
                let base = (e * STATE_COMPONENTS + c) * np;
                values.extend_from_slice(&q[base..base + np]);
            }
        }
        Self { order: order as u32, elements: elements as u64, values }
    }

    pub fn to_element_major(&self) -> Vec<f64> {
        let np = (self.order as usize + 1).pow(3);
        let k = self.elements as usize;
        let mut q = vec![0.0; self.values.len()];
        for c in 0..STATE_COMPONENTS {
            for e in 0..k {
                let src = (c * k + e) * np;
                let dst = (e * STATE_COMPONENTS + c) * np;
                q[dst..dst + np].copy_from_slice(&self.values[src..src + np]);
            }
        }
        q
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.values.len());
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.order.to_le_bytes());
        out.extend_from_slice(&self.elements.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: String| Error::InvalidConfig(format!("snapshot: {msg}"));
        if bytes.len() < HEADER_LEN || &bytes[..4] != SNAPSHOT_MAGIC {
            return Err(bad("missing DGAE header".into()));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
        let version = u32_at(4);
        if version != SNAPSHOT_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let order = u32_at(8);
        let elements = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
        let expected = (order as u64 + 1).pow(3) * elements * STATE_COMPONENTS as u64 * 8;
        let body = &bytes[HEADER_LEN..];
        if body.len() as u64 != expected {
            return Err(bad(format!("expected {expected} payload bytes, found {}", body.len())));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Self { order, elements, values })
    }
}

pub fn write_snapshot(path: &Path, snapshot: &Snapshot) -> Result<()> {
    std::fs::write(path, snapshot.to_bytes())?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    Snapshot::from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let s = Snapshot { order: 1, elements: 1, values: vec![0.5; 96] };
        let b = s.to_bytes();
        assert_eq!(&b[..4], b"DGAE");
        assert_eq!(b[4..8], [1, 0, 0, 0]);
        assert_eq!(b[8..12], [1, 0, 0, 0]);
        assert_eq!(b[12..20], [1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(b.len(), 20 + 96 * 8);
        assert_eq!(b[20..28], 0.5f64.to_le_bytes());
    }

    #[test]
    fn round_trip_and_layout_conversion() {
        let k = 3;
        let q: Vec<f64> = (0..k * 12 * 8).map(|i| i as f64).collect();
        let s = Snapshot::from_element_major(1, k, &q);
        // Component 0 of element 1 follows component 0 of element 0.
        assert_eq!(s.values[8], q[12 * 8]);
        assert_eq!(Snapshot::from_bytes(&s.to_bytes()).unwrap(), s);
        assert_eq!(s.to_element_major(), q);
    }

    #[test]
    fn rejects_corrupt_input() {
        let s = Snapshot { order: 1, elements: 1, values: vec![0.0; 96] };
        let mut b = s.to_bytes();
        assert!(Snapshot::from_bytes(&b[..b.len() - 1]).is_err());
        b[0] = b'X';
        assert!(Snapshot::from_bytes(&b).is_err());
        let mut v = s.to_bytes();
        v[4] = 9;
        assert!(Snapshot::from_bytes(&v).is_err());
    }
}
