//! Reproducible random streams.
//!
//! Every randomized routine draws from a ChaCha8 stream keyed by
//! `(seed, domain, index)`, where `index` identifies the unit of work (a
//! vertex, a sweep/vertex pair, a candidate pair). Results therefore do not
//! depend on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub(crate) const DOMAIN_DIAGONAL: u64 = 1;
pub(crate) const DOMAIN_GAMMA: u64 = 2;
pub(crate) const DOMAIN_CANDIDATES: u64 = 3;
pub(crate) const DOMAIN_VERIFY: u64 = 4;
pub(crate) const DOMAIN_QUERY: u64 = 5;
pub(crate) const DOMAIN_FILTER: u64 = 6;

/// Returns the generator for one unit of work.
pub fn stream(seed: u64, domain: u64, index: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}

/// Plain seeded generator for callers that own a single sequential stream.
pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Packs an unordered vertex pair into a stream index.
pub(crate) fn pair_index(i: usize, j: usize) -> u64 {
    ((i as u64) << 32) | (j as u64 & 0xFFFF_FFFF)
}
