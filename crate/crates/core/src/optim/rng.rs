//! Counter-style seeding for the randomized parts of the optimizers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for one refresh of one layer. Distinct `(seed, layer,
/// refresh)` triples give independent streams, so layers can be stepped in
/// any order or in parallel without changing results.
pub fn refresh_rng(seed: u64, layer: u64, refresh: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&layer.to_le_bytes());
    key[16..24].copy_from_slice(&refresh.to_le_bytes());
    key[24..].copy_from_slice(b"switch\0\0");
    ChaCha8Rng::from_seed(key)
}
