use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deepest supported refinement: 3 × 20 = 60 bits of interleaved code.
pub const MAX_LEVEL: u32 = 20;

/// A Morton (Z-order) key: the interleaved bits of an integer coordinate
/// triple at a fixed refinement level.
///
/// Within each bit triple, `x` occupies the least significant position, then
/// `y`, then `z`. Keys of equal level order exactly as the Z curve visits
/// their cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MortonKey {
    pub code: u64,
    pub level: u32,
}

/// Spread the low 21 bits of `v` so that bit `i` lands on bit `3i`.
fn spread3(v: u64) -> u64 {
    let mut x = v & 0x1f_ffff;
    x = (x | (x << 32)) & 0x001f_0000_0000_ffff;
    x = (x | (x << 16)) & 0x001f_0000_ff00_00ff;
    x = (x | (x << 8)) & 0x100f_00f0_0f00_f00f;
    x = (x | (x << 4)) & 0x10c3_0c30_c30c_30c3;
    x = (x | (x << 2)) & 0x1249_2492_4924_9249;
    x
}

/// Inverse of [`spread3`].
fn compact3(v: u64) -> u32 {
    let mut x = v & 0x1249_2492_4924_9249;
    x = (x | (x >> 2)) & 0x10c3_0c30_c30c_30c3;
    x = (x | (x >> 4)) & 0x100f_00f0_0f00_f00f;
    x = (x | (x >> 8)) & 0x001f_0000_ff00_00ff;
    x = (x | (x >> 16)) & 0x001f_0000_0000_ffff;
    x = (x | (x >> 32)) & 0x1f_ffff;
    x as u32
}

pub fn morton_encode(x: u32, y: u32, z: u32, level: u32) -> Result<MortonKey> {
    if level > MAX_LEVEL {
        return Err(Error::LevelTooDeep(level));
    }
    let limit = 1u64 << level;
    if u64::from(x) >= limit || u64::from(y) >= limit || u64::from(z) >= limit {
        return Err(Error::CoordinateOverflow { x, y, z, level });
    }
    let code = spread3(x.into()) | (spread3(y.into()) << 1) | (spread3(z.into()) << 2);
    Ok(MortonKey { code, level })
}

pub fn morton_decode(key: MortonKey) -> (u32, u32, u32) {
    (
        compact3(key.code),
        compact3(key.code >> 1),
        compact3(key.code >> 2),
    )
}
