//! Deterministic random streams.
//!
//! Every replica of every estimator draws from its own ChaCha8 stream,
//! selected by `(seed, replica index)`. Results therefore depend only on the
//! seed and the replica count, never on how replicas are scheduled across
//! threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Random stream handed to samplers.
pub type Stream = ChaCha8Rng;

/// Stream for replica `index` under `seed`.
pub fn substream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform deviate on [0, 1).
#[inline]
pub fn uniform(stream: &mut Stream) -> f64 {
    stream.random::<f64>()
}

/// Standard exponential deviate, consuming one uniform.
#[inline]
pub fn std_exponential(stream: &mut Stream) -> f64 {
    -(1.0 - uniform(stream)).ln()
}

/// Mixes a label into a master seed (FNV-1a over the label, then a
/// splitmix64 finalizer). Used to give each named check its own seed.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = master ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs `f` once per replica, in parallel, and returns the results in replica
/// order.
pub fn replicate<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Stream) -> T + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| f(&mut substream(seed, i)))
        .collect()
}

/// Fallible variant of [`replicate`]; the first error in replica order wins.
pub fn try_replicate<T, E, F>(n: usize, seed: u64, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(&mut Stream) -> Result<T, E> + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| f(&mut substream(seed, i)))
        .collect()
}
