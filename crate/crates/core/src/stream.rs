//! Deterministic random-stream derivation.
//!
//! Every replicate of every estimator draws from its own ChaCha stream,
//! keyed by `(seed, domain, index)`. Streams are derived by hashing the key
//! into a full 256-bit ChaCha seed, so replicate `i` sees the same bits
//! whether the run uses one worker or sixty-four, and the `domain` tag keeps
//! the outer joint draws, the two bound sides, per-term inner loops, and
//! training all on non-overlapping streams.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Domain tags for the independent stream families used internally.
pub mod domain {
    /// Outer joint draws (x̃, y) ~ p shared by all terms of a replicate.
    pub const OUTER: u64 = 0x01;
    /// Inner draws for upper-bound weights.
    pub const UPPER: u64 = 0x02;
    /// Inner draws for lower-bound weights (including refresh moves).
    pub const LOWER: u64 = 0x03;
    /// Proposal training (regression fits).
    pub const TRAIN: u64 = 0x04;
    /// Model and experiment setup (synthetic nets, benchmark covariances).
    pub const SETUP: u64 = 0x05;
    /// Oracle Monte Carlo integrations (kept off the estimator streams).
    pub const ORACLE: u64 = 0x06;

    /// Per-term domains for composed measures: term `t`, side `side`
    /// (0 upper, 1 lower).
    pub fn term(t: usize, side: u64) -> u64 {
        0x100 + (t as u64) * 2 + side
    }
}

fn splitmix64(state: &mut u64) {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    *state = z ^ (z >> 31);
}

fn mixed(seed: u64, domain: u64, index: u64) -> [u8; 32] {
    let mut s = seed;
    splitmix64(&mut s);
    s ^= domain.wrapping_mul(0xa076_1d64_78bd_642f);
    splitmix64(&mut s);
    s ^= index.wrapping_mul(0xe703_7ed1_a0b4_28db);
    splitmix64(&mut s);
    let mut out = [0u8; 32];
    for chunk in out.chunks_exact_mut(8) {
        splitmix64(&mut s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    out
}

/// The RNG handed to models and proposals throughout the crate.
pub type Stream = ChaCha12Rng;

/// Derive the stream for `(seed, domain, index)`.
pub fn substream(seed: u64, domain: u64, index: u64) -> Stream {
    ChaCha12Rng::from_seed(mixed(seed, domain, index))
}

/// Fold an arbitrary label (say, a selection fingerprint) into a domain tag.
pub fn fold_label(domain: u64, label: u64) -> u64 {
    let mut s = domain ^ label.rotate_left(17);
    splitmix64(&mut s);
    s
}
