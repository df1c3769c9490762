//! Deterministic random streams for parallel ensembles.
//!
//! A master seed and a domain label (usually the experiment id) fix a
//! ChaCha8 key; every trial index selects its own ChaCha stream under that
//! key. Streams never overlap, so trial `i` draws the same numbers no
//! matter which worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every stochastic kernel in the crate.
pub type TrialRng = ChaCha8Rng;

/// Identifier written into output metadata.
pub const PRNG_ALGORITHM: &str = "chacha8/key=splitmix64(master,fnv1a(domain))/stream=trial";

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer. Bijective on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Source of per-trial generators for one `(master_seed, domain)` pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamSeeder {
    key: [u8; 32],
}

impl StreamSeeder {
    pub fn new(master_seed: u64, domain: &str) -> Self {
        let mut state = master_seed ^ mix64(fnv1a(domain.as_bytes()));
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            state = state.wrapping_add(GOLDEN_GAMMA);
            chunk.copy_from_slice(&mix64(state).to_le_bytes());
        }
        Self { key }
    }

    /// Generator for trial `index`.
    pub fn stream(&self, index: u64) -> TrialRng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index);
        rng
    }

    /// 64-bit digest of `(key, index)`, distinct for distinct indices.
    pub fn stream_fingerprint(&self, index: u64) -> u64 {
        let k = u64::from_le_bytes(self.key[..8].try_into().expect("8 bytes"));
        mix64(k.wrapping_add(mix64(index)))
    }
}

/// Standalone generator for a single 64-bit seed.
pub fn rng_from_seed(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}
