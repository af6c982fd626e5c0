//! Deterministic randomness.
//!
//! Every consumer draws from its own named sub-stream derived from the master
//! seed, so adding draws in one module never shifts another module's numbers.
//! Event-level draws (one sensing, one database query) use keyed generators:
//! the same key always yields the same numbers no matter which other events
//! happened before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Topology,
    Activity,
    Fading,
    Sensing,
    Reporting,
    Database,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Topology => 0x746f_706f,
            Stream::Activity => 0x6163_7476,
            Stream::Fading => 0x6661_6465,
            Stream::Sensing => 0x7365_6e73,
            Stream::Reporting => 0x7265_706f,
            Stream::Database => 0x6462_6173,
        }
    }
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a sequence of words into one 64-bit value.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut state = 0x243F_6A88_85A3_08D3u64;
    let mut acc = 0u64;
    for &p in parts {
        state ^= p;
        acc = splitmix64(&mut state) ^ acc.rotate_left(17);
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    master: u64,
}

impl SeedTree {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Persistent generator for a module-level stream.
    pub fn stream(&self, stream: Stream) -> ChaCha8Rng {
        self.keyed(stream, &[])
    }

    /// Generator for one keyed event inside `stream`.
    pub fn keyed(&self, stream: Stream, key: &[u64]) -> ChaCha8Rng {
        let mut state = mix_seed(&[self.master, stream.tag()]);
        for &k in key {
            state = mix_seed(&[state, k]);
        }
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}
