//! Reproducible randomness: counter-derived per-trial streams and
//! circularly-symmetric complex Gaussian sampling.
//!
//! Every Monte-Carlo trial owns an independent ChaCha stream whose key is
//! derived from `(master seed, context ids...)`, so trials can run in any
//! order or in parallel and still reproduce bit-identically.

use libm::{cos, log, sin, sqrt};
use num_complex::Complex;
pub use rand_chacha::rand_core::RngCore;
use rand_chacha::rand_core::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

use crate::linalg::C64;

const TWO_PI: f64 = core::f64::consts::TAU;
// 2^-53, so (x >> 11) maps a u64 onto the dyadic grid in [0, 1).
const U53: f64 = 1.0 / 9_007_199_254_740_992.0;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream from a master seed and a list of context
/// ids (figure, sweep index, trial index, ...).
pub fn stream_rng(master_seed: u64, ids: &[u64]) -> ChaCha8Rng {
    let mut state = master_seed ^ 0x6A09_E667_F3BC_C908;
    let _ = splitmix64(&mut state);
    for &id in ids {
        state ^= id.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let _ = splitmix64(&mut state);
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Uniform draw in the half-open interval `[0, 1)`.
pub fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * U53
}

/// Uniform draw in the half-open interval `(0, 1]`; safe under `ln`.
fn uniform_open(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * U53
}

/// One circularly-symmetric complex Gaussian sample with `E|z|^2 = sigma2`,
/// generated by the polar method (amplitude from the exponential law, phase
/// uniform). `sigma2 = 0` consumes the same two draws and returns zero.
pub fn cscg(rng: &mut impl RngCore, sigma2: f64) -> C64 {
    let amp = sqrt(-sigma2 * log(uniform_open(rng)));
    let phase = TWO_PI * uniform(rng);
    Complex::new(amp * cos(phase), amp * sin(phase))
}

/// Unit-modulus symbol with uniformly random phase (`|s| = 1` exactly).
pub fn unit_symbol(rng: &mut impl RngCore) -> C64 {
    let phase = TWO_PI * uniform(rng);
    Complex::new(cos(phase), sin(phase))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let mut a = stream_rng(42, &[1, 2, 3]);
        let mut b = stream_rng(42, &[1, 2, 3]);
        let mut c = stream_rng(42, &[1, 2, 4]);
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn cscg_moments() {
        let mut rng = stream_rng(7, &[0]);
        let n = 200_000;
        let mut mean = C64::new(0.0, 0.0);
        let mut power = 0.0;
        for _ in 0..n {
            let z = cscg(&mut rng, 2.0);
            mean += z;
            power += z.norm_sqr();
        }
        mean /= n as f64;
        power /= n as f64;
        assert!(mean.norm() < 0.02);
        assert!((power - 2.0).abs() < 0.05);
    }

    #[test]
    fn cscg_zero_variance_is_zero_but_advances_stream() {
        let mut a = stream_rng(1, &[]);
        let mut b = stream_rng(1, &[]);
        let z = cscg(&mut a, 0.0);
        assert_eq!(z, C64::new(0.0, 0.0));
        let _ = cscg(&mut b, 1.0);
        // both consumed two words
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn unit_symbols_have_unit_modulus() {
        let mut rng = stream_rng(3, &[9]);
        for _ in 0..100 {
            assert!((unit_symbol(&mut rng).norm() - 1.0).abs() < 1e-12);
        }
    }
}
