//! Seed discipline for reproducible ensembles.
//!
//! Every stochastic object is drawn from a ChaCha8 stream keyed by a 64-bit
//! seed. Ensembles never share a stream: member `k` of an ensemble seeded with
//! `s` uses [`child_seed`]`(s, k)`, so results do not depend on evaluation
//! order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed for the `index`-th member derived from `seed`.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(index.wrapping_mul(0xD6E8_FEB8_6659_FD93)))
}

/// Child seed keyed by a label, used to separate independent roles
/// (noise, shots, ...) drawn from one master seed.
pub fn labelled_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label keeps the mapping stable across builds.
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01B3);
    }
    child_seed(seed, h)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
