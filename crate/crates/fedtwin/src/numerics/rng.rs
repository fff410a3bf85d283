//! Seeded pseudo-random generation and weight initialization.
//!
//! Reproducibility across runs, threads, and processes is a hard requirement
//! for the round protocol tests, so the generators are fixed algorithms
//! rather than a library RNG whose stream could change between versions:
//! a splitmix64 stage whitens the user seed (and derives sub-seeds), and a
//! 64-bit xorshift generator produces the draw stream.

use crate::error::{Error, Result};
use crate::numerics::tensor::Tensor;

/// Seed whitener / sub-seed deriver.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Main draw stream: Marsaglia xorshift64, seeded through splitmix64 so
/// that low-entropy seeds (0, 1, 2, ...) still start well mixed.
#[derive(Debug, Clone)]
pub struct XorShift64 {
    state: u64,
}

impl XorShift64 {
    pub fn new(seed: u64) -> Self {
        let mut mix = SplitMix64::new(seed);
        let mut state = mix.next_u64();
        if state == 0 {
            // xorshift has a zero fixed point; any nonzero constant works.
            state = 0x9E37_79B9_7F4A_7C15;
        }
        XorShift64 { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.state = x;
        x
    }

    /// Uniform draw in `[0, 1)` using the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// Deterministic Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// Weight initialization schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    /// `U(-1/sqrt(fan_in), +1/sqrt(fan_in))` where `fan_in` is the column
    /// count of the matrix.
    UniformScaled,
    Zeros,
}

/// Deterministic tensor initialization: same `(shape, seed, scheme)` always
/// produces identical bytes.
pub fn seeded_init(rows: usize, cols: usize, seed: u64, scheme: InitScheme) -> Result<Tensor> {
    if rows == 0 || cols == 0 {
        return Err(Error::shape(format!(
            "init shape must be positive, got {rows}x{cols}"
        )));
    }
    match scheme {
        InitScheme::Zeros => Ok(Tensor::zeros(rows, cols)),
        InitScheme::UniformScaled => {
            let bound = 1.0 / (cols as f64).sqrt();
            let mut rng = XorShift64::new(seed);
            let data = (0..rows * cols)
                .map(|_| rng.uniform(-bound, bound))
                .collect();
            Tensor::from_vec(rows, cols, data)
        }
    }
}
