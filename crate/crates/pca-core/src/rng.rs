//! Reproducible randomness.
//!
//! All sampling in the crate flows through a [`RngPolicy`]: a master seed
//! plus a stream-derivation rule. Each trajectory `m` gets its own ChaCha12
//! stream keyed by `(seed, m)`, so simulating in parallel, in any order, on
//! any thread count, reproduces the exact bytes of a sequential run.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
// Re-exported so downstream crates can name the trait bound that this
// crate's sampling functions take, without depending on rand_core directly.
pub use rand_chacha::rand_core::RngCore;

/// Namespace for per-trajectory streams.
pub const STREAM_TRAJECTORY: u64 = 0;
/// Namespace for ensemble de-linking draws (one stream per time index).
pub const STREAM_DELINK: u64 = 1;
/// Namespace for experiment-level randomness (random matrices, resamples).
pub const STREAM_EXPERIMENT: u64 = 2;

/// Master seed plus the derivation rule `(seed, namespace, index) → stream`.
///
/// ChaCha natively exposes 2⁶⁴ independent streams per seed; the rule
/// partitions that space as `namespace << 48 | index`, giving each purpose
/// its own block of 2⁴⁸ streams. Identical `(seed, namespace, index)`
/// always yields a bit-identical generator, regardless of thread
/// scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RngPolicy {
    seed: u64,
}

impl RngPolicy {
    /// A policy from a master seed.
    pub fn new(seed: u64) -> Self {
        RngPolicy { seed }
    }

    /// The master seed.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The private stream of trajectory `m`.
    pub fn trajectory_stream(&self, m: u64) -> ChaCha12Rng {
        self.named_stream(STREAM_TRAJECTORY, m)
    }

    /// A stream for `(namespace, index)`; see the module constants.
    pub fn named_stream(&self, namespace: u64, index: u64) -> ChaCha12Rng {
        debug_assert!(index < 1 << 48, "stream index exceeds the namespace block");
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream((namespace << 48) | (index & ((1 << 48) - 1)));
        rng
    }
}

/// A uniform draw in `[0, 1)` with 53 random bits.
#[inline]
pub fn next_unit(rng: &mut impl RngCore) -> f64 {
    // 2⁻⁵³ times a 53-bit integer; exactly representable, never 1.0.
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// Samples an index from an unnormalized-but-near-stochastic weight vector
/// by inverse CDF with a single uniform draw.
///
/// Weights are analytically a probability vector here (convex combinations
/// of rows of a stochastic matrix); tiny negative entries from floating
/// arithmetic (≥ −1e-15) are clamped to zero before sampling. If the draw
/// exceeds the accumulated total (possible when the true sum rounds a hair
/// below 1), the last positive-weight index is returned.
#[inline]
pub fn sample_categorical(rng: &mut impl RngCore, weights: &[f64]) -> usize {
    debug_assert!(!weights.is_empty());
    debug_assert!(weights.iter().all(|&w| w >= -1e-15), "weight below clamp threshold");
    let u = next_unit(rng);
    let mut acc = 0.0f64;
    let mut last_positive = 0usize;
    for (i, &w) in weights.iter().enumerate() {
        let w = if w > 0.0 { w } else { 0.0 };
        if w > 0.0 {
            last_positive = i;
        }
        acc += w;
        if u < acc {
            return i;
        }
    }
    last_positive
}
