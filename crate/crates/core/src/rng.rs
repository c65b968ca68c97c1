//! Seeded random streams.
//!
//! Every code gets its own ChaCha stream keyed by `(master seed, purpose,
//! index)`, so results do not depend on how codes are scheduled across
//! threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a derived stream is used for. Distinct purposes never share a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// Alice's label, loss, Eve, Bob's basis and measurement for one code.
    Code,
    /// Channel rotation for one fluctuation block.
    Rotation,
    /// Reveal selection in block inversion.
    Blocks,
    /// Privacy-amplification hash seed.
    Hash,
    /// Per-row seeds of a sweep.
    Sweep,
}

impl Purpose {
    fn salt(self) -> u64 {
        match self {
            Purpose::Code => 0x243f_6a88_85a3_08d3,
            Purpose::Rotation => 0x1319_8a2e_0370_7344,
            Purpose::Blocks => 0xa409_3822_299f_31d0,
            Purpose::Hash => 0x082e_fa98_ec4e_6c89,
            Purpose::Sweep => 0x4528_21e6_38d0_1377,
        }
    }
}

/// Factory for per-index streams under one master seed.
#[derive(Debug, Clone)]
pub struct StreamFactory {
    base: ChaCha8Rng,
}

impl StreamFactory {
    pub fn new(master_seed: u64, purpose: Purpose) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(master_seed ^ purpose.salt()),
        }
    }

    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng
    }
}

/// One-shot stream for `(seed, purpose, index)`.
pub fn stream(master_seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    StreamFactory::new(master_seed, purpose).stream(index)
}

/// SplitMix64 finalizer; used to derive child seeds.
pub fn derive_seed(master_seed: u64, purpose: Purpose, index: u64) -> u64 {
    let mut z = master_seed ^ purpose.salt();
    z = z.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
