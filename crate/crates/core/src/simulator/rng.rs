//! The random-number contract behind every generated artifact.
//!
//! * Generator: ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//!   `SeedableRng::seed_from_u64(seed)`.
//! * A unit draw takes one `next_u64()` and returns `(x >> 11) · 2⁻⁵³`,
//!   a float in `[0, 1)`.
//! * A uniform index below `n` is `min(⌊unit · n⌋, n − 1)`.
//! * A weighted index draws one unit `u`, scales it by the weight total and
//!   returns the first index whose cumulative weight exceeds it (the last
//!   index if rounding leaves none).
//! * A Bernoulli draw with probability `p` is `unit < p`.
//!
//! Every draw consumes exactly one `u64`, so streams are reproducible
//! across platforms and implementations.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Clone, Debug)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `0..n`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "cannot choose from nothing");
        ((self.unit() * n as f64) as usize).min(n - 1)
    }

    /// Index drawn with probability proportional to `weights`.
    pub fn weighted(&mut self, weights: &[f64]) -> usize {
        assert!(!weights.is_empty(), "cannot choose from nothing");
        let total: f64 = weights.iter().sum();
        let x = self.unit() * total;
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if x < acc {
                return i;
            }
        }
        weights.len() - 1
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<u64> = {
            let mut s = Sampler::new(7);
            (0..16).map(|_| s.index(1000) as u64).collect()
        };
        let mut s = Sampler::new(7);
        let b: Vec<u64> = (0..16).map(|_| s.index(1000) as u64).collect();
        assert_eq!(a, b);
        let mut other = Sampler::new(8);
        let c: Vec<u64> = (0..16).map(|_| other.index(1000) as u64).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn unit_matches_the_documented_formula() {
        let mut raw = ChaCha8Rng::seed_from_u64(42);
        let mut s = Sampler::new(42);
        for _ in 0..8 {
            let expected = (raw.next_u64() >> 11) as f64 / 9007199254740992.0;
            assert_eq!(s.unit(), expected);
        }
    }

    #[test]
    fn draws_stay_in_range() {
        let mut s = Sampler::new(1);
        for n in 1..50 {
            assert!(s.index(n) < n);
        }
        for _ in 0..100 {
            let u = s.unit();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn weights_bias_the_choice() {
        let mut s = Sampler::new(3);
        let mut hits = [0usize; 2];
        for _ in 0..2000 {
            hits[s.weighted(&[1.0, 3.0])] += 1;
        }
        assert!(hits[1] > 2 * hits[0]);
        assert!(!Sampler::new(3).chance(0.0));
        assert!(Sampler::new(3).chance(1.0));
    }
}
