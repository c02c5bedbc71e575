//! Parameter arithmetic for the (k+1, k, k) MBR regenerating code.
//!
//! The file size is normalized to B = 1, so every bandwidth below is a
//! fraction of the file. Quantities are kept as exact rationals; the
//! identity (k+1)·γ(k) = 2 would otherwise be lost to rounding for some k.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::ParamError;

/// Bandwidth and block-size parameters of a (k+1, k, k) MBR code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MbrCodeParams {
    /// Number of data blocks k.
    pub k: u32,
    /// Total blocks n = k + 1 (one block is redundancy).
    pub n: u32,
    /// Repair degree d = k.
    pub d: u32,
    /// Per-node stored block size α(k) = 2/(k+1), in file-size units.
    pub block_size: Ratio<u64>,
    /// Repair bandwidth γ(k) = 2/(k+1); for MBR it equals the block size.
    pub repair_bandwidth: Ratio<u64>,
    /// Total download kα(k) = 2k/(k+1) to reconstruct the file.
    pub retrieval_bandwidth: Ratio<u64>,
}

impl MbrCodeParams {
    pub fn block_size_f64(&self) -> f64 {
        ratio_to_f64(self.block_size)
    }

    pub fn repair_bandwidth_f64(&self) -> f64 {
        ratio_to_f64(self.repair_bandwidth)
    }

    pub fn retrieval_bandwidth_f64(&self) -> f64 {
        ratio_to_f64(self.retrieval_bandwidth)
    }
}

fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Builds the (k+1, k, k) MBR parameter set for a given k.
pub fn mbr_params(k: u32) -> Result<MbrCodeParams, ParamError> {
    if k < 1 {
        return Err(ParamError::domain("k", k as f64, "must be >= 1"));
    }
    let gamma = Ratio::new(2u64, k as u64 + 1);
    Ok(MbrCodeParams {
        k,
        n: k + 1,
        d: k,
        block_size: gamma,
        repair_bandwidth: gamma,
        retrieval_bandwidth: gamma * Ratio::from_integer(k as u64),
    })
}
