//! The 64-bit linear congruential generator used for every seeded trial.
//!
//! `state <- state * 6364136223846793005 + 1442695040888963407 (mod 2^64)`;
//! a uniform double in `[0, 1)` is the top 53 bits of the new state times
//! `2^-53`. The generator is fixed so that other implementations can replay
//! identical trials from the same seed.

use crate::C64;

const MULTIPLIER: u64 = 6_364_136_223_846_793_005;
const INCREMENT: u64 = 1_442_695_040_888_963_407;

#[derive(Debug, Clone)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(MULTIPLIER).wrapping_add(INCREMENT);
        self.state
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Real and imaginary parts drawn independently from `[-1, 1)`, real part first.
    pub fn complex(&mut self) -> C64 {
        let re = self.uniform_in(-1.0, 1.0);
        let im = self.uniform_in(-1.0, 1.0);
        C64::new(re, im)
    }

    /// A point of the open disc with modulus in `[r_min, r_max)`.
    pub fn disc_point(&mut self, r_min: f64, r_max: f64) -> C64 {
        let r = self.uniform_in(r_min, r_max);
        let t = self.uniform_in(0.0, std::f64::consts::TAU);
        C64::from_polar(r, t)
    }

    pub fn complex_vec(&mut self, n: usize) -> Vec<C64> {
        (0..n).map(|_| self.complex()).collect()
    }

    /// Independent generator for trial `index` of a batch seeded with `seed`.
    pub fn for_trial(seed: u64, index: u64) -> Self {
        let mut base = Self::new(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        base.next_u64();
        base
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_outputs_are_fixed() {
        let mut g = Lcg64::new(0);
        assert_eq!(g.next_u64(), INCREMENT);
        assert_eq!(
            g.next_u64(),
            INCREMENT.wrapping_mul(MULTIPLIER).wrapping_add(INCREMENT)
        );
    }

    #[test]
    fn uniform_stays_in_range() {
        let mut g = Lcg64::new(42);
        for _ in 0..10_000 {
            let u = g.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<_> = (0..5)
            .map({
                let mut g = Lcg64::new(7);
                move |_| g.next_u64()
            })
            .collect();
        let b: Vec<_> = (0..5)
            .map({
                let mut g = Lcg64::new(7);
                move |_| g.next_u64()
            })
            .collect();
        assert_eq!(a, b);
    }
}
