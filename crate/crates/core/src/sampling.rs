//! Random inputs: bandlimited trigonometric polynomials and seeded streams.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{idft, SampledFunction, Spectrum, TorusGrid};

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for (seed, index); the stream does not depend on how
/// many other streams were drawn before it.
pub fn substream(seed: u64, index: u64) -> Rng64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index.wrapping_add(1));
    r
}

pub fn random_complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_spectrum(grid: TorusGrid, band: i64, rng: &mut impl Rng) -> Spectrum {
    let mut s = Spectrum::zeros(grid);
    for xi in -band..=band {
        s.set(xi, random_complex(rng));
    }
    s
}

/// Trigonometric polynomial with random coefficients on |ξ| ≤ band.
pub fn random_bandlimited(grid: TorusGrid, band: i64, rng: &mut impl Rng) -> SampledFunction {
    idft(&random_spectrum(grid, band, rng))
}

/// Random smooth bandlimited function with geometrically decaying
/// coefficients (a stand-in for a Schwartz function on the torus).
pub fn random_smooth(grid: TorusGrid, band: i64, rng: &mut impl Rng) -> SampledFunction {
    let mut s = Spectrum::zeros(grid);
    for xi in -band..=band {
        let w = (-(xi as f64 / (band as f64 + 1.0)).powi(2) * 2.0).exp();
        s.set(xi, random_complex(rng) * w);
    }
    idft(&s)
}
