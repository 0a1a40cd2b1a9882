//! Memory cap for dense materializations (dense operators, `full()` of TT tensors).
//!
//! The cap is read from `STMAXWELL_MEM_CAP_MB` (megabytes); default 1024.

use crate::error::{Error, Result};

pub const MEM_CAP_ENV: &str = "STMAXWELL_MEM_CAP_MB";
const DEFAULT_CAP_MB: u64 = 1024;

pub fn memory_cap_bytes() -> u64 {
    std::env::var(MEM_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u64>().ok())
        .unwrap_or(DEFAULT_CAP_MB)
        .saturating_mul(1 << 20)
}

/// Fails with [`Error::MemoryCap`] when `n_f64` doubles would not fit under the cap.
pub fn check_f64_alloc(what: &str, n_f64: u128) -> Result<()> {
    let cap = memory_cap_bytes();
    let needed = n_f64.saturating_mul(8);
    if needed > cap as u128 {
        return Err(Error::MemoryCap {
            what: what.to_string(),
            needed: u64::try_from(needed).unwrap_or(u64::MAX),
            cap,
        });
    }
    Ok(())
}
