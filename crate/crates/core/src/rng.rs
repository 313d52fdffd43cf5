//! Counter-based random numbers.
//!
//! Every draw is a pure hash of `(key, draw_index)`, so a render or training
//! run produces the same numbers no matter how work is split across threads.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngKey {
    pub pixel_index: u64,
    pub sample_index: u32,
    pub bounce_counter: u32,
    pub global_seed: u64,
}

impl RngKey {
    pub const fn new(pixel_index: u64, sample_index: u32, bounce_counter: u32, global_seed: u64) -> Self {
        Self {
            pixel_index,
            sample_index,
            bounce_counter,
            global_seed,
        }
    }

    pub const fn with_bounce(self, bounce_counter: u32) -> Self {
        Self {
            bounce_counter,
            ..self
        }
    }

    /// Uniform draw in `[0, 1)`; shorthand for [`rng_uniform`].
    pub fn uniform(self, draw_index: u32) -> f32 {
        rng_uniform(self, draw_index)
    }
}

// SplitMix64 finaliser.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64 random bits for `(key, draw_index)`.
#[inline]
pub fn rng_bits(key: RngKey, draw_index: u32) -> u64 {
    let mut h = mix64(key.global_seed ^ 0x6a09_e667_f3bc_c908);
    h = mix64(h ^ key.pixel_index);
    h = mix64(h ^ (((key.sample_index as u64) << 32) | key.bounce_counter as u64));
    mix64(h ^ draw_index as u64)
}

/// Uniform `f32` in `[0, 1)` with 24 bits of resolution.
#[inline]
pub fn rng_uniform(key: RngKey, draw_index: u32) -> f32 {
    (rng_bits(key, draw_index) >> 40) as f32 * (1.0 / (1u64 << 24) as f32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_function_of_key_and_index() {
        let k = RngKey::new(12, 3, 4, 5);
        assert_eq!(rng_uniform(k, 9), rng_uniform(k, 9));
        assert_ne!(rng_uniform(k, 9), rng_uniform(k, 10));
        assert_ne!(rng_uniform(k, 9), rng_uniform(k.with_bounce(5), 9));
    }

    #[test]
    fn mean_of_a_million_draws() {
        let k = RngKey::new(0, 0, 0, 2024);
        let n = 1_000_000u32;
        let mut sum = 0.0f64;
        for i in 0..n {
            let u = rng_uniform(k, i);
            assert!((0.0..1.0).contains(&u));
            sum += u as f64;
        }
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
    }

    #[test]
    fn equidistributed_over_sixteen_bins() {
        // Chi-square with 15 dof; 99.9% quantile is 37.7.
        let mut bins = [0u32; 16];
        let n = 160_000u32;
        for i in 0..n {
            let u = rng_uniform(RngKey::new(i as u64, 1, 2, 3), 0);
            bins[(u * 16.0) as usize] += 1;
        }
        let expect = n as f64 / 16.0;
        let chi2: f64 = bins.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
        assert!(chi2 < 37.7, "chi2 {chi2}");
    }

    #[test]
    fn largest_output_is_below_one() {
        let max = (u64::MAX >> 40) as f32 * (1.0 / (1u64 << 24) as f32);
        assert!(max < 1.0);
    }
}
