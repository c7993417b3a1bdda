//! Deterministic counter-based random streams.
//!
//! Every Monte Carlo sample gets its own ChaCha stream derived from the run
//! seed and the sample index, so batches are reproducible bit-for-bit under
//! any parallel schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::real::Real;

pub type StreamRng = ChaCha8Rng;

/// Independent stream `stream` of the generator seeded by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw in the half-open interval `(0, 1]`.
pub fn unit_open<T: Real>(rng: &mut impl Rng) -> T {
    T::of(1.0 - rng.random::<f64>())
}

/// Exponential waiting time with the given rate, by inversion.
pub fn exp_sample<T: Real>(rng: &mut impl Rng, rate: T) -> T {
    debug_assert!(rate > T::zero());
    -unit_open::<T>(rng).ln() / rate
}
