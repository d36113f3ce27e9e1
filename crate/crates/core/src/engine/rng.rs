//! Keyed counter-based variates.
//!
//! Every random quantity is read from a ChaCha8 keystream selected by
//! `(seed, stream id)` at a fixed word position, so the k-th variate of a
//! site depends only on `(seed, site, k)`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const CLOCK: u64 = 0;
const INITIAL: u64 = 1;

/// 2^-52
const UNIT: f64 = 1.0 / 4_503_599_627_370_496.0;

fn zigzag(site: i64) -> u64 {
    ((site << 1) ^ (site >> 63)) as u64
}

fn site_stream(seed: u64, site: i64, domain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((zigzag(site) << 2) | domain);
    rng
}

/// Keystream driving the Poisson clock of `site`.
pub(crate) fn clock_stream(seed: u64, site: i64) -> ChaCha8Rng {
    site_stream(seed, site, CLOCK)
}

/// Uniform in the open interval (0, 1).
#[inline]
pub(crate) fn uniform_open(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * UNIT
}

/// The shared initial-data uniform `U_x` of `site`.
pub fn initial_uniform(seed: u64, site: i64) -> f64 {
    uniform_open(site_stream(seed, site, INITIAL).next_u64())
}

/// Independent child seed for `(purpose, index)`, e.g. the replica index.
/// Mixing is keyed, so replica `i` never depends on how many others exist.
pub fn derive_seed(master: u64, purpose: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(purpose);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

/// Purpose tags for [`derive_seed`].
pub mod purpose {
    pub const REPLICA: u64 = 1;
    pub const BURN_IN_EVENTS: u64 = 2;
    pub const BURN_IN_TIME: u64 = 3;
}

/// Uniform in (0, 1) keyed by `(seed, purpose, index)`.
pub fn keyed_uniform(seed: u64, purpose: u64, index: u64) -> f64 {
    uniform_open(derive_seed(seed, purpose, index))
}
