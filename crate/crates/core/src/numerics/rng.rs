//! Deterministic random number streams.
//!
//! Every randomized routine in the crate draws from a `ChaCha8Rng` keyed by
//! a (master seed, stream index) pair, with child streams derived by value
//! rather than by splitting generator state. Replication order therefore has
//! no effect on any stream's draws: rep k of an experiment sees the same
//! generator whether reps run sequentially, in parallel, or alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix_next(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// Hash two words into one; used to fold stream indices into the key state.
fn mix2(a: u64, b: u64) -> u64 {
    let mut s = a;
    let from_a = splitmix_next(&mut s);
    let mut t = b ^ from_a;
    splitmix_next(&mut t)
}

/// Addressable source of independent generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    state: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self { state: mix2(master_seed, stream_index) }
    }

    /// Child stream; `substream(k)` for distinct `k` gives unrelated keys.
    pub fn substream(&self, child: u64) -> Self {
        Self { state: mix2(self.state, child) }
    }

    /// Fresh generator for this stream. Calling twice restarts the draws.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut s = self.state;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix_next(&mut s).to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}
