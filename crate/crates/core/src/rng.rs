//! Portable seeded generator used for every randomized dataset operation.
//!
//! The algorithm is fixed so that splits and fold assignments can be
//! reproduced bit-for-bit in any language:
//!
//! * **Seeding.** `state = splitmix64_mix(seed + (stream + 1) · 0x9E3779B97F4A7C15)`
//!   (wrapping arithmetic). A zero state is replaced by `0x9E3779B97F4A7C15`.
//!   `splitmix64_mix(z)` is the SplitMix64 finalizer:
//!   `z = (z ^ (z >> 30)) · 0xBF58476D1CE4E5B9; z = (z ^ (z >> 27)) · 0x94D049BB133111EB; z ^ (z >> 31)`.
//!   Distinct `stream` values give independent generators from one seed.
//! * **Step.** xorshift64*: `x ^= x >> 12; x ^= x << 25; x ^= x >> 27;`
//!   output `x · 0x2545F4914F6CDD1D` (wrapping).
//! * **Bounded integers.** `below(n)`: draw `x` until `x < (2⁶⁴−1) − ((2⁶⁴−1) mod n)`,
//!   return `x mod n`.
//! * **Shuffle.** Fisher–Yates from the back: for `i = len−1 down to 1`,
//!   `j = below(i + 1)`, swap `i` and `j`.
//! * **Unit floats.** `(x >> 11) · 2⁻⁵³`.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftRng {
    state: u64,
}

impl ShiftRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mixed = splitmix64_mix(seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(GOLDEN)));
        Self {
            state: if mixed == 0 { GOLDEN } else { mixed },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform integer in `0..bound`; `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        let limit = u64::MAX - (u64::MAX % bound);
        loop {
            let x = self.next_u64();
            if x < limit {
                return x % bound;
            }
        }
    }

    /// Uniform float in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal sample (Box–Muller, one value per call).
    pub fn gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_finalizer_known_values() {
        // SplitMix64 with seed 0: first output is mix(0 + GOLDEN).
        assert_eq!(splitmix64_mix(GOLDEN), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64_mix(GOLDEN.wrapping_mul(2)), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn streams_differ_and_repeat() {
        let a: Vec<u64> = {
            let mut r = ShiftRng::new(42);
            (0..4).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = ShiftRng::new(42);
            (0..4).map(|_| r.next_u64()).collect()
        };
        let c: Vec<u64> = {
            let mut r = ShiftRng::with_stream(42, 1);
            (0..4).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn below_stays_in_range() {
        let mut r = ShiftRng::new(7);
        for bound in [1u64, 2, 3, 7, 1000] {
            for _ in 0..200 {
                assert!(r.below(bound) < bound);
            }
        }
    }

    #[test]
    fn unit_floats_in_range() {
        let mut r = ShiftRng::new(3);
        for _ in 0..1000 {
            let x = r.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut v: Vec<u32> = (0..50).collect();
        ShiftRng::new(9).shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }
}
