//! Seed derivation.
//!
//! Every random draw in the crate comes from ChaCha8 seeded through
//! [`stream`]: the 64-bit seed picks the key and the sample (or shard) index
//! picks the ChaCha stream, so sample `i` sees the same numbers whether the
//! samples are evaluated in order or in parallel. Independent sub-seeds such
//! as per-instance seeds in a sweep are derived with [`derive_seed`]
//! (SplitMix64 finalizer over the root seed and a label).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Generator for the `index`-th independent stream under `seed`.
pub fn stream(seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `(label, index)` under `root`.
pub fn derive_seed(root: u64, label: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(root) ^ label) ^ index)
}

/// Label of a short ASCII tag, for use with [`derive_seed`].
pub const fn label(tag: &str) -> u64 {
    // FNV-1a
    let bytes = tag.as_bytes();
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut i = 0;
    while i < bytes.len() {
        h ^= bytes[i] as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
        i += 1;
    }
    h
}
