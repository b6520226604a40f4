//! Counter-based RNG streams.
//!
//! Every Monte Carlo path owns the stream keyed by `(master seed, path
//! index)`, so batch results do not depend on how paths are distributed
//! across workers.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math;

/// One deterministic random stream.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    /// Stream `stream` of the generator seeded with `master`.
    pub fn new(master: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master);
        inner.set_stream(stream);
        StreamRng { inner }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on the open interval (0, 1]; never returns 0, so logs are safe.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [0, 1).
    #[inline]
    pub fn uniform_co(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Exponential with the given rate.
    #[inline]
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -math::ln(self.uniform()) / rate
    }

    /// Poisson count by exponential spacings; exact for any mean.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        debug_assert!(mean >= 0.0);
        let mut n = 0u64;
        let mut acc = 0.0f64;
        loop {
            acc += -math::ln(self.uniform());
            if acc > mean {
                return n;
            }
            n += 1;
        }
    }

    /// Binomial(m, p) by m Bernoulli trials (offspring counts are small).
    pub fn binomial(&mut self, m: u32, p: f64) -> u64 {
        let mut k = 0u64;
        for _ in 0..m {
            if self.uniform_co() < p {
                k += 1;
            }
        }
        k
    }

    /// Geometric on {0, 1, …} with success probability p: P(k) = p(1−p)^k.
    pub fn geometric(&mut self, p: f64) -> u64 {
        if p >= 1.0 {
            return 0;
        }
        let u = self.uniform();
        (math::ln(u) / math::ln_1p(-p)) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = StreamRng::new(7, 0);
        let mut b = StreamRng::new(7, 0);
        let mut c = StreamRng::new(7, 1);
        let xs: alloc::vec::Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: alloc::vec::Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let zs: alloc::vec::Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }

    #[test]
    fn uniform_never_zero() {
        let mut r = StreamRng::new(1, 2);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!(u > 0.0 && u <= 1.0);
        }
    }

    #[test]
    fn poisson_mean_roughly_right() {
        let mut r = StreamRng::new(3, 0);
        let n = 20_000;
        let mean = 4.0;
        let total: u64 = (0..n).map(|_| r.poisson(mean)).sum();
        let emp = total as f64 / n as f64;
        // se = sqrt(4/20000) ≈ 0.014
        assert!((emp - mean).abs() < 0.08, "empirical mean {emp}");
    }

    #[test]
    fn geometric_mean_roughly_right() {
        let mut r = StreamRng::new(4, 0);
        let p: f64 = 0.75;
        let n = 40_000;
        let total: u64 = (0..n).map(|_| r.geometric(p)).sum();
        let emp = total as f64 / n as f64;
        let want = (1.0 - p) / p;
        assert!((emp - want).abs() < 0.02, "empirical mean {emp} want {want}");
    }
}
