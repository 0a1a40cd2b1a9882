//! Binary dump of tensor trains.
//!
//! Layout, all integers and floats little-endian:
//!
//! | field       | type            |
//! |-------------|-----------------|
//! | magic       | `b"TT4D"`       |
//! | version     | `u32` (= 1)     |
//! | ndim `d`    | `u32`           |
//! | mode sizes  | `d × u64`       |
//! | ranks       | `(d+1) × u64`, boundary ranks included |
//! | cores       | `f64`, core 0 first, each in `(r0, n, r1)` row-major order |

use std::io::{Read, Write};

use super::tensor::{Core3, TtTensor};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"TT4D";
pub const VERSION: u32 = 1;

pub fn write_tt<W: Write>(mut w: W, x: &TtTensor) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(x.ndim() as u32).to_le_bytes())?;
    for n in x.mode_sizes() {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    w.write_all(&1u64.to_le_bytes())?;
    for r in x.ranks() {
        w.write_all(&(r as u64).to_le_bytes())?;
    }
    w.write_all(&1u64.to_le_bytes())?;
    for c in x.cores() {
        for v in c.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<usize> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    usize::try_from(u64::from_le_bytes(b)).map_err(|_| Error::Format("size does not fit in usize".into()))
}

pub fn read_tt<R: Read>(mut r: R) -> Result<TtTensor> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let d = read_u32(&mut r)? as usize;
    if d == 0 || d > 64 {
        return Err(Error::Format(format!("implausible dimension count {d}")));
    }
    let modes = (0..d).map(|_| read_u64(&mut r)).collect::<Result<Vec<_>>>()?;
    let ranks = (0..=d).map(|_| read_u64(&mut r)).collect::<Result<Vec<_>>>()?;
    let mut cores = Vec::with_capacity(d);
    for k in 0..d {
        let len = ranks[k]
            .checked_mul(modes[k])
            .and_then(|v| v.checked_mul(ranks[k + 1]))
            .ok_or_else(|| Error::Format("core size overflows".into()))?;
        crate::limits::check_f64_alloc("TT core from file", len as u128)?;
        let mut buf = vec![0u8; len * 8];
        r.read_exact(&mut buf)?;
        let data = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        cores.push(Core3::new(ranks[k], modes[k], ranks[k + 1], data).map_err(|e| Error::Format(e.to_string()))?);
    }
    TtTensor::new(cores).map_err(|e| Error::Format(e.to_string()))
}
