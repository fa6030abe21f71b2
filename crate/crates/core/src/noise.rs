//! Deterministic Gaussian noise for path simulation.
//!
//! Every draw is a pure function of `(seed, path, step)`:
//!
//! 1. a per-path key is derived from the master seed and the path index,
//! 2. the step's 64-bit word is the `step`-th output of a SplitMix64 stream
//!    keyed by that path key,
//! 3. the word becomes a uniform in the open interval (0, 1),
//! 4. the uniform is mapped through the standard normal inverse CDF.
//!
//! SplitMix64 is counter-based, so streams can be consumed in any order,
//! re-entered at any step, and generated from any number of worker threads
//! with bit-identical results. The inverse-CDF mapping consumes exactly one
//! word per draw, which is what makes re-entry at a known step possible.

use statrs::distribution::{ContinuousCDF, Normal};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output mixer (Steele, Lea & Flood's finalizer).
#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Key of the independent substream owned by one path.
#[inline]
pub fn path_key(seed: u64, path: u64) -> u64 {
    splitmix64(seed ^ splitmix64(path.wrapping_mul(GOLDEN_GAMMA) ^ 0x6c62_272e_07bb_0142))
}

/// The `step`-th raw word of the substream under `key`.
#[inline]
fn stream_word(key: u64, step: u64) -> u64 {
    splitmix64(key.wrapping_add(step.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Uniform draw in the open interval (0, 1): the top 53 bits of the word,
/// centered on the representable grid so 0 and 1 are never produced.
#[inline]
fn uniform_from_word(word: u64) -> f64 {
    ((word >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal quantile function.
#[inline]
pub fn standard_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// The standard-normal draw a path consumes at a given step.
#[inline]
pub fn normal_draw(seed: u64, path: u64, step: u64) -> f64 {
    standard_normal_quantile(uniform_from_word(stream_word(path_key(seed, path), step)))
}

/// Derives a purpose-specific sub-seed from a master seed, so every source of
/// randomness in a run flows from one configured value without the streams
/// colliding.
pub fn derive_seed(master: u64, tag: &str) -> u64 {
    // FNV-1a over the tag, folded into the master seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in tag.as_bytes() {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(master ^ h)
}
