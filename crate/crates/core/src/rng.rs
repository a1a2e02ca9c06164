//! Deterministic random streams.
//!
//! Every random quantity in a simulation is drawn from a stream keyed by
//! `(master_seed, index, role)`. Streams never depend on scheduling, so a
//! trial produces the same numbers regardless of which worker runs it.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Generator used for every stream.
pub type StreamRng = ChaCha8Rng;

/// Purpose tag that separates independent streams within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum Role {
    Eigenbasis = 1,
    Channel = 2,
    StatisticsCodebook = 3,
    RvqCodebook = 4,
    Sampler = 5,
}

impl Role {
    /// Packs the role and an entity index (usually the user) into one tag.
    pub fn tag(self, entity: u64) -> u64 {
        ((self as u64) << 48) ^ entity
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives a 64-bit seed for `(master_seed, index, role_tag)`.
pub fn derive_seed(master_seed: u64, index: u64, role_tag: u64) -> u64 {
    let a = splitmix64(master_seed);
    let b = splitmix64(a ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(b ^ role_tag.wrapping_mul(0xA076_1D64_78BD_642F))
}

/// Generator seeded directly from a 64-bit seed.
pub fn from_seed(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

/// Generator for `(master_seed, index, role_tag)`.
pub fn stream(master_seed: u64, index: u64, role_tag: u64) -> StreamRng {
    from_seed(derive_seed(master_seed, index, role_tag))
}

/// Circularly-symmetric complex Gaussian with unit variance (1/2 per real part).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Fills `out` with i.i.d. unit-variance complex Gaussians.
pub fn fill_complex_gaussian<R: Rng + ?Sized>(rng: &mut R, out: &mut [Complex64]) {
    for z in out.iter_mut() {
        *z = complex_gaussian(rng);
    }
}
