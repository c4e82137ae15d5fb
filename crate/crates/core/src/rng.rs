//! Seeded pseudo-random streams.
//!
//! All randomness in the crate is drawn from SplitMix64 so that generated
//! point sets and matrices are reproducible bit for bit across platforms.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

pub type Stream = SplitMix64;

pub fn stream(seed: u64) -> Stream {
    SplitMix64::seed_from_u64(seed)
}

/// Uniform draw from `[lo, hi)`.
pub fn uniform(rng: &mut Stream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// Complex number with real and imaginary part uniform in `[-1, 1)`.
pub fn complex_unit_box(rng: &mut Stream) -> Complex64 {
    Complex64::new(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0))
}

/// Derives an independent child seed; used to give each instance of a
/// property check its own stream.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    let mut rng = stream(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.gen()
}
