//! Seeded, splittable random streams.
//!
//! Every random quantity in a Monte-Carlo run is drawn from a substream
//! addressed by a path such as `[trial, user]`. Substreams are derived by
//! hashing the root seed with the path, so the numbers a trial sees do not
//! depend on how many trials run, in which order, or on how many workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::{Cplx, Real};

/// Root of a tree of independent random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    seed: u64,
}

/// Stream domains, so that e.g. channel and spreading draws of the same
/// (trial, user) never share a key.
pub mod domain {
    pub const CHANNEL: u64 = 0x4348_414e;
    pub const SPREADING: u64 = 0x5350_5244;
    pub const ORDERING: u64 = 0x4f52_4452;
    pub const AUX: u64 = 0x4155_5800;
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child stream addressed by `path`.
    pub fn child(&self, path: &[u64]) -> SeedStream {
        let mut state = self.seed;
        let mut acc = splitmix64(&mut state);
        for &p in path {
            state ^= p.wrapping_mul(0xd6e8_feb8_6659_fd93);
            acc = acc.rotate_left(23) ^ splitmix64(&mut state);
        }
        SeedStream { seed: acc }
    }

    /// Generator for the substream addressed by `path`.
    pub fn rng(&self, path: &[u64]) -> ChaCha8Rng {
        let mut state = self.child(path).seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}

/// Draws a circularly-symmetric complex Gaussian with `E|z|² = variance`.
pub fn complex_normal<T: Real, R: Rng + ?Sized>(rng: &mut R, variance: T) -> Cplx<T> {
    let sd = (variance.as_f64() * 0.5).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Cplx::new(T::lit(re * sd), T::lit(im * sd))
}
