//! Deterministic, splittable random streams.
//!
//! Every Monte-Carlo loop in the crate splits its work into fixed-size chunks.
//! Chunk `k` of a stream draws from its own ChaCha8 generator seeded by
//! `mix(seed, stream, k)`, so the output depends only on `(seed, count)` and
//! never on how many rayon workers pick up the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Number of draws handled by one chunk.
pub const CHUNK_SIZE: usize = 1 << 14;

/// The generator type used everywhere in the crate.
pub type StreamRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a seed together with any number of labels into a fresh 64-bit seed.
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix64(seed), |acc, &l| splitmix64(acc ^ splitmix64(l)))
}

/// Generator for chunk `chunk` of the stream rooted at `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &[chunk]))
}

/// Fills `count` values by running `draw` on each chunk's generator.
///
/// `draw(rng, n)` must push exactly `n` values. Chunks run in parallel but are
/// concatenated in chunk order.
pub fn chunked_draws<T, F>(seed: u64, count: usize, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut StreamRng, usize, &mut Vec<T>) + Sync,
{
    let chunks = count.div_ceil(CHUNK_SIZE);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let len = CHUNK_SIZE.min(count - k * CHUNK_SIZE);
            let mut rng = chunk_rng(seed, k as u64);
            let mut out = Vec::with_capacity(len);
            draw(&mut rng, len, &mut out);
            debug_assert_eq!(out.len(), len);
            out
        })
        .collect();
    let mut values = Vec::with_capacity(count);
    for p in parts {
        values.extend(p);
    }
    values
}
