//! Deterministic random streams.
//!
//! Every stochastic routine in this crate draws from ChaCha12, a counter-based
//! stream cipher RNG. A 64-bit seed is expanded into the 256-bit key with
//! SplitMix64, and independent substreams are selected through the cipher's
//! stream counter. Trial `i` of a run always reads stream `i` of the same key,
//! so results are bit-identical regardless of how trials are scheduled.

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for substream `stream_id` of the generator keyed by `seed`.
pub fn stream(seed: u64, stream_id: u64) -> ChaCha12Rng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(stream_id);
    rng
}

/// Per-trial RNG within a named domain (experiment phase), so that two phases
/// of one run never share a stream even at equal trial indices.
pub fn trial_stream(seed: u64, domain: u32, trial: u32) -> ChaCha12Rng {
    stream(seed, ((domain as u64) << 32) | trial as u64)
}

/// Uniform draw in [0, 1) with 53 random mantissa bits.
pub fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Pair of independent standard normal draws (Box-Muller).
pub fn normal_pair(rng: &mut impl RngCore) -> (f64, f64) {
    // 1 - u in (0, 1] keeps the log argument away from zero.
    let u = 1.0 - uniform(rng);
    let v = uniform(rng);
    let r = (-2.0 * u.ln()).sqrt();
    let theta = TWO_PI * v;
    (r * theta.cos(), r * theta.sin())
}

/// Standard complex Gaussian: real and imaginary parts are independent N(0, 1).
pub fn complex_gaussian(rng: &mut impl RngCore) -> Complex64 {
    let (re, im) = normal_pair(rng);
    Complex64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = stream(42, 0);
        let mut b = stream(42, 0);
        for _ in 0..64 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_are_distinct() {
        let mut a = stream(42, 0);
        let mut b = stream(42, 1);
        let same = (0..64).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn trial_streams_do_not_collide_across_domains() {
        let mut a = trial_stream(7, 1, 3);
        let mut b = trial_stream(7, 2, 3);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut rng = stream(1, 0);
        for _ in 0..10_000 {
            let x = uniform(&mut rng);
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn normal_moments_are_plausible() {
        let mut rng = stream(9, 0);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let (x, y) = normal_pair(&mut rng);
            sum += x + y;
            sum_sq += x * x + y * y;
        }
        let mean = sum / (2 * n) as f64;
        let var = sum_sq / (2 * n) as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
    }
}
