//! Reproducible RNG streams.
//!
//! Every randomized operation takes an explicit generator. Replicate-level
//! parallelism derives one independent stream per replicate from
//! `(master_seed, stream_id)` using ChaCha12's 64-bit stream counter, so
//! results are identical for any thread count and any replicate execution
//! order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type Rng = ChaCha12Rng;

/// Independent stream `stream_id` of the generator seeded by `seed`.
pub fn stream(seed: u64, stream_id: u64) -> Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Mix an experiment label into a master seed so distinct experiments
/// sharing one seed draw from unrelated streams. FNV-1a over the label.
pub fn label_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    seed ^ h
}
