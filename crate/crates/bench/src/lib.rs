//! Shared fixtures for the benchmark targets.

pub use d2dcache::{PolicySpec, SimConfig, SystemParams};

/// Operating point behind most cost-vs-R comparisons: N = 100, ω = 0.5,
/// T = 0.02, R = 5.
pub fn reference_params() -> SystemParams {
    SystemParams::new(5.0, 100.0, 0.5, 0.02).unwrap()
}

pub fn short_config(seed: u64) -> SimConfig {
    SimConfig {
        horizon_multiplier: 200.0,
        seed,
        replications: 1,
    }
}
