//! Shared fixtures for the benchmarks.

use fpp_core::sampling::{random_bandlimited, rng};
use fpp_core::{SampledFunction, TorusGrid};

/// Three seeded inputs whose combined bandwidth fits the trilinear budget.
pub fn inputs(n: usize, seed: u64) -> [SampledFunction; 3] {
    let g = TorusGrid::new(n).expect("power-of-two grid");
    let mut r = rng(seed);
    [0; 3].map(|_| random_bandlimited(g, n as i64 / 8 - 1, &mut r))
}
