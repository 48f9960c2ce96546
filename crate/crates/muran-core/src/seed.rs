//! Deterministic seed derivation.
//!
//! Every random stream in the simulator is keyed by a child seed derived
//! from the experiment master seed, a purpose tag, and integer indices
//! (hour, policy id, draw index, ...). The derivation is a fixed
//! splitmix64 chain over an FNV-1a hash of the tag, so serial and
//! parallel execution of the experiment matrix see identical streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `master`, a purpose `tag`, and `indices`.
pub fn child_seed(master: u64, tag: &str, indices: &[u64]) -> u64 {
    let mut h = mix(master ^ fnv1a(tag.as_bytes()));
    for &idx in indices {
        h = mix(h ^ idx.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    }
    h
}

/// ChaCha8 stream for a derived seed.
pub fn rng_for(master: u64, tag: &str, indices: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(master, tag, indices))
}
