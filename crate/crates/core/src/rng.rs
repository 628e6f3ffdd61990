//! Random-stream construction.
//!
//! Every run owns exactly one [`RunRng`]: a ChaCha8 stream keyed from the
//! 64-bit run seed via `SeedableRng::seed_from_u64` (SplitMix64 key
//! expansion). ChaCha8 is platform-independent, so a `(config, seed)` pair
//! reproduces the same byte stream on any machine running this
//! implementation. Other implementations of the same model are only expected
//! to match distributionally, not bitwise.
//!
//! Derived seeds for sweeps are computed with [`derive_seed`], a SplitMix64
//! chain over `(base, lane, index)`. A derived seed depends on nothing else,
//! so extending a sweep never changes the seeds of existing design points.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The per-run generator. One instance per run; never shared.
pub type RunRng = ChaCha8Rng;

/// Build the generator for a run seed.
pub fn run_rng(seed: u64) -> RunRng {
    RunRng::seed_from_u64(seed)
}

/// SplitMix64 finalizer (Steele, Lea & Flood's mixing constants).
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic seed for `(base, lane, index)`, e.g. lane = sweep value
/// index and index = replicate number.
pub fn derive_seed(base: u64, lane: u64, index: u64) -> u64 {
    let mut s = splitmix64(base);
    s = splitmix64(s ^ lane.wrapping_mul(0xA076_1D64_78BD_642F));
    s = splitmix64(s ^ index.wrapping_mul(0xE703_7ED1_A0B4_28DB));
    s
}
