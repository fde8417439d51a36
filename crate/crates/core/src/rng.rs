//! The one seeded generator every random choice goes through.
//!
//! Algorithm: PCG-XSL-RR 128/64 (`Pcg64` from `rand_pcg`), state initialised
//! with `Pcg64::new(seed as u128 | SEED_TAG, STREAM)`. Integers below a bound
//! use Lemire's multiply-shift with rejection; floats take the top 53 bits.
//! Any implementation following these three rules reproduces the same draws.

use rand_core::Rng;
use rand_pcg::Pcg64;

const SEED_TAG: u128 = 0x4853_4341_505f_7631 << 64;
const STREAM: u128 = 0xa02b_dbf7_bb3c_0a7a_c28f_a16a_64ab_f96b;

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: Pcg64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            inner: Pcg64::new(seed as u128 | SEED_TAG, STREAM),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..bound`; `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Uniform float in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal draw (Box-Muller, one value per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// `m` distinct indices from `0..k` in increasing order.
    pub fn sample_indices(&mut self, k: usize, m: usize) -> Vec<usize> {
        assert!(m <= k);
        let mut pool: Vec<usize> = (0..k).collect();
        for i in 0..m {
            let j = i + self.below((k - i) as u64) as usize;
            pool.swap(i, j);
        }
        let mut chosen = pool[..m].to_vec();
        chosen.sort_unstable();
        chosen
    }

    /// Independent child generator, e.g. one per parallel trial.
    pub fn fork(&mut self) -> SeededRng {
        SeededRng::new(self.next_u64())
    }
}
