//! Deterministic pseudo-random number generation.
//!
//! All dataset generation runs on SplitMix64 (Steele, Lea & Flood, 2014), a
//! counter-based 64-bit generator with a fixed, platform-independent update
//! rule. Using one explicit algorithm end to end is what makes `(n, seed)`
//! a complete description of a generated instance: the same pair reproduces
//! the same bytes on every machine.
//!
//! Uniform doubles are produced by 53-bit mantissa division, offset by half
//! an ulp so the result lies strictly inside the open interval (0, 1).

/// SplitMix64 generator state.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Next 64-bit output.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform double in the open interval (0, 1).
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }
}
