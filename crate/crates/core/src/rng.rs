//! Seed derivation and counter-based random streams.
//!
//! Every random quantity is drawn from a ChaCha8 keystream selected by a
//! derived 64-bit key and a stream index. Matrix rows get one stream each, so
//! a row's entries depend only on `(seed, row)` and rows can be generated in
//! any order or in parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags separating independent substreams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Matrix = 0x6d61_7472,
    Flip = 0x666c_6970,
    Dither = 0x6469_7468,
    Signal = 0x7369_676e,
    Lambda = 0x6c61_6d62,
    Trial = 0x7472_6961,
    Instance = 0x696e_7374,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes `master` together with `parts` into a new 64-bit seed.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Sub-seed for one purpose.
pub fn sub_seed(seed: u64, purpose: Purpose) -> u64 {
    derive_seed(seed, &[purpose as u64])
}

/// Independent keystream `index` under `(seed, purpose)`.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, purpose));
    rng.set_stream(index);
    rng
}
