//! Deterministic random-number plumbing.
//!
//! Every stochastic routine in this crate derives its randomness from an
//! explicit `(seed, stream, index)` triple, so a run is reproducible from
//! its config alone and independent draws can be handed to rayon workers
//! without any shared-state coordination. Streams partition usage (jitter
//! offsets vs. random angles vs. property fuzzing); the index is typically
//! a sample number, so sample `i` sees the same draws no matter how many
//! threads are in play or in what order samples complete.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream id for lattice-offset jitter draws.
pub const STREAM_Z2: u64 = 1;
/// Stream id for random rotation angles.
pub const STREAM_ANGLE: u64 = 2;
/// Stream id for randomized self-checks (identity suites, fuzz draws).
pub const STREAM_CHECK: u64 = 3;

/// Build a generator keyed by `(seed, stream, index)`.
///
/// The 32-byte ChaCha key is the three ids in little-endian followed by a
/// fixed golden-ratio pad, so distinct triples give unrelated streams and
/// the construction has no hidden global state.
pub fn keyed_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream.to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    key[24..32].copy_from_slice(&0x9e37_79b9_7f4a_7c15u64.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// One uniform draw in [0, 1) keyed by `(seed, stream, index)`.
pub fn unit_jitter(seed: u64, stream: u64, index: u64) -> f64 {
    keyed_rng(seed, stream, index).gen::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_key_same_draws() {
        let a: Vec<f64> = {
            let mut r = keyed_rng(7, STREAM_Z2, 42);
            (0..8).map(|_| r.gen::<f64>()).collect()
        };
        let b: Vec<f64> = {
            let mut r = keyed_rng(7, STREAM_Z2, 42);
            (0..8).map(|_| r.gen::<f64>()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_keys_decorrelate() {
        let base = unit_jitter(7, STREAM_Z2, 42);
        assert_ne!(base, unit_jitter(8, STREAM_Z2, 42));
        assert_ne!(base, unit_jitter(7, STREAM_ANGLE, 42));
        assert_ne!(base, unit_jitter(7, STREAM_Z2, 43));
    }

    #[test]
    fn jitter_in_unit_interval() {
        for i in 0..1000 {
            let u = unit_jitter(1, STREAM_CHECK, i);
            assert!((0.0..1.0).contains(&u));
        }
    }
}
