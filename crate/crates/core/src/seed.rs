//! Seed derivation for independent, reproducible RNG streams.

/// SplitMix64 finalizer; a single full-period mixing step.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed for stream `index` derived from `base`.
///
/// Streams are decorrelated by mixing the index with a large odd constant
/// before the SplitMix64 finalizer; identical (base, index) always yields
/// the identical sub-seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ index.wrapping_mul(0xA24B_AED4_963E_E407))
}
