//! Deterministic random number generation for workload sampling.
//!
//! The generator is xorshift64* (Vigna, 2016) over a single 64-bit state.
//! Each slot gets its own stream so that the requests of slot `t` depend only
//! on `(seed, t)`:
//!
//! ```text
//! state(seed, t) = splitmix64(seed XOR splitmix64(t))
//! ```
//!
//! where `splitmix64(x)` is one output of the SplitMix64 generator started
//! at state `x` (increment `0x9E3779B97F4A7C15`, finalizer multipliers
//! `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`). A zero state is remapped to
//! `0x9E3779B97F4A7C15` because xorshift never leaves zero.
//!
//! Derived draws:
//!
//! * `next_f64`: `(next_u64() >> 11) * 2^-53`, uniform on `[0, 1)`.
//! * `uniform_inclusive(lo, hi)`: `lo + next_u64() % (hi - lo + 1)`.
//! * `poisson(lambda)`: Knuth's product-of-uniforms method. For
//!   `lambda > 30` the mean is split into `ceil(lambda / 30)` equal chunks and
//!   the chunk counts are summed, which keeps `exp(-chunk)` well away from
//!   underflow.
//!
//! Changing anything here invalidates the golden request files under
//! `tests/data`.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 output for the given state.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// xorshift64* generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimRng {
    state: u64,
}

impl SimRng {
    pub fn new(state: u64) -> Self {
        let state = if state == 0 { GOLDEN_GAMMA } else { state };
        Self { state }
    }

    /// The substream for one slot of one run.
    pub fn for_slot(seed: u64, slot: u64) -> Self {
        Self::new(splitmix64(seed ^ splitmix64(slot)))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer on `[lo, hi]`. Modulo bias is accepted.
    pub fn uniform_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo <= hi);
        let span = hi - lo;
        if span == u64::MAX {
            return self.next_u64();
        }
        lo + self.next_u64() % (span + 1)
    }

    pub fn poisson(&mut self, lambda: f64) -> u64 {
        if lambda <= 0.0 {
            return 0;
        }
        let chunks = (lambda / 30.0).ceil().max(1.0) as u64;
        let per_chunk = lambda / chunks as f64;
        (0..chunks).map(|_| self.poisson_knuth(per_chunk)).sum()
    }

    fn poisson_knuth(&mut self, lambda: f64) -> u64 {
        let limit = (-lambda).exp();
        let mut count = 0;
        let mut product = self.next_f64();
        while product > limit {
            count += 1;
            product *= self.next_f64();
        }
        count
    }
}
