//! Seeded random insertion orders.
//!
//! Every "random order" in this crate comes from [`SplitMix64`], a
//! counter-based 64-bit generator with a fixed, documented output function:
//!
//! ```text
//! state <- state + 0x9E3779B97F4A7C15            (wrapping)
//! z     <- (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
//! z     <- (z ^ (z >> 27)) * 0x94D049BB133111EB
//! out   <- z ^ (z >> 31)
//! ```
//!
//! Bounded draws use rejection sampling (reject outputs below
//! `2^64 mod bound`), and permutations use the descending Fisher–Yates
//! shuffle, so the mapping `(n, seed) -> order` is reproducible in any
//! language that implements the three lines above.

use std::fmt;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 generator.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// An independent generator for sub-stream `stream` of this seed.
    ///
    /// Forking does not advance `self`, so per-step randomness can be drawn
    /// in any order (or concurrently) without changing the result.
    pub fn fork(&self, stream: u64) -> Self {
        Self::new(mix64(self.state ^ mix64(stream.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform integer in `[0, bound)`. `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % bound;
            }
        }
    }

    /// Uniform float in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// A seeded permutation of `0..n`: `order[i]` is the element inserted at step `i`.
#[derive(Clone, PartialEq, Eq)]
pub struct Permutation {
    seed: u64,
    order: Vec<u32>,
    rank: Vec<u32>,
}

impl Permutation {
    /// Fisher–Yates shuffle of `0..n` driven by `SplitMix64::new(seed)`.
    pub fn seeded(n: usize, seed: u64) -> Self {
        assert!(n <= u32::MAX as usize, "permutation too large");
        let mut rng = SplitMix64::new(seed);
        let mut order: Vec<u32> = (0..n as u32).collect();
        for i in (1..n).rev() {
            let j = rng.below(i as u64 + 1) as usize;
            order.swap(i, j);
        }
        Self::build(order, seed)
    }

    /// The identity order `0, 1, ..., n-1`.
    pub fn identity(n: usize) -> Self {
        Self::build((0..n as u32).collect(), 0)
    }

    /// Wraps an explicit order. Returns `None` unless `order` is a permutation of `0..len`.
    pub fn from_order(order: Vec<u32>) -> Option<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &e in &order {
            let e = e as usize;
            if e >= n || seen[e] {
                return None;
            }
            seen[e] = true;
        }
        Some(Self::build(order, 0))
    }

    fn build(order: Vec<u32>, seed: u64) -> Self {
        let mut rank = vec![0u32; order.len()];
        for (i, &e) in order.iter().enumerate() {
            rank[e as usize] = i as u32;
        }
        Self { seed, order, rank }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn order(&self) -> &[u32] {
        &self.order
    }

    /// Element inserted at `step`.
    #[inline]
    pub fn at(&self, step: usize) -> usize {
        self.order[step] as usize
    }

    /// Step at which `element` is inserted. Panics if `element >= n`.
    #[inline]
    pub fn rank_of(&self, element: usize) -> usize {
        self.rank[element] as usize
    }

    /// Whitespace-separated index list, for debugging dumps.
    pub fn to_index_list(&self) -> String {
        let mut out = String::with_capacity(self.order.len() * 6);
        for (i, e) in self.order.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&e.to_string());
        }
        out
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Permutation").field("seed", &self.seed).field("order", &self.order).finish()
    }
}
