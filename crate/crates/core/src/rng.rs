//! Deterministic, splittable random streams.
//!
//! Every randomized routine takes a stream built from a master seed, a
//! domain tag and an index, so trials can run in any order (or in
//! parallel) and still reproduce bit for bit.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A ChaCha stream keyed by `(master_seed, domain, index)`. Distinct
/// triples give independent streams.
pub fn stream_rng(master_seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&domain.to_le_bytes());
    seed[16..24].copy_from_slice(&index.to_le_bytes());
    seed[24..32].copy_from_slice(&0x5eed_cafe_f00d_d00du64.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}
