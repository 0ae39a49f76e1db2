//! Seeded random source for the annotation simulator.
//!
//! The generator is SplitMix64: a 64-bit counter advanced by
//! `0x9E3779B97F4A7C15` per draw, passed through the finaliser
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! Derived draws are defined on top of `next_u64` so other implementations
//! can reproduce every sequence:
//!
//! - `uniform01()` = `(next_u64() >> 11) * 2^-53`, in `[0, 1)`;
//! - `below(n)` = high 64 bits of `next_u64() * n` (128-bit product);
//! - `range_inclusive(lo, hi)` = `lo + below(hi - lo + 1)`;
//! - `normal()` = Box-Muller on two `uniform01()` draws, cosine branch,
//!   with `u1` mapped to `1 - u1` so the logarithm stays finite.

use rand::RngCore;
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

#[derive(Debug, Clone)]
pub struct SimRng {
    inner: SplitMix64,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        SimRng {
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform01(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`; `n` must be nonzero.
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    pub fn range_inclusive(&mut self, lo: u32, hi: u32) -> u32 {
        lo + self.below((hi - lo) as u64 + 1) as u32
    }

    /// Uniformly chosen element of a nonempty slice.
    pub fn choose<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len() as u64) as usize]
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform01();
        let u2 = self.uniform01();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Independent generator for a sub-task, derived from this one.
    pub fn fork(&mut self) -> SimRng {
        SimRng::new(self.next_u64())
    }
}
