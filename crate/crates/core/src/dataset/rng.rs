//! Pinned deterministic PRNG (splitmix-style) so placements, splits, and
//! weight draws reproduce bit-for-bit everywhere.

/// Advance the 64-bit state and return the next output.
#[inline]
pub fn prng_next(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Convenience wrapper owning the stream state.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        prng_next(&mut self.state)
    }

    /// Uniform in [0, 1) with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n). One stream draw per call.
    #[inline]
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below needs n > 0");
        self.next_u64() % n
    }

    /// Fisher-Yates partial shuffle: after the call, the first `count`
    /// elements are a uniform draw without replacement.
    pub fn partial_shuffle<T>(&mut self, xs: &mut [T], count: usize) {
        let n = xs.len();
        assert!(count <= n, "cannot draw {count} from {n}");
        for i in 0..count {
            let j = i + self.next_below((n - i) as u64) as usize;
            xs.swap(i, j);
        }
    }

    /// Full Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        let n = xs.len();
        self.partial_shuffle(xs, n);
    }
}
