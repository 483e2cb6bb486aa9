//! Label-forked deterministic random streams.
//!
//! Every random draw made by a planner comes from a stream forked off a key
//! that encodes *where* in the search tree the draw happens (node, action,
//! visit number, purpose). Two planners that build the same tree therefore
//! consume the same randomness at the same positions, no matter how much
//! extra non-random work one of them performs in between.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Position key from which streams are forked. Cheap to copy and store in tree nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct StreamKey(pub u64);

impl StreamKey {
    pub fn from_seed(seed: u64) -> Self {
        StreamKey(splitmix64(seed ^ 0x5157_4850_4654_0001))
    }

    pub fn fork(self, label: &[u8]) -> StreamKey {
        StreamKey(splitmix64(self.0 ^ splitmix64(fnv1a64(label))))
    }

    /// Fork by a purpose tag followed by integer coordinates (action, index, visit, ...).
    pub fn fork_indexed(self, tag: &[u8], indices: &[u64]) -> StreamKey {
        let mut k = self.fork(tag);
        for &i in indices {
            k = StreamKey(splitmix64(k.0 ^ splitmix64(i.wrapping_add(0xA5A5_A5A5))));
        }
        k
    }

    pub fn stream(self) -> SeededStream {
        SeededStream::from_key(self)
    }
}

/// A deterministic pseudo-random stream that can be forked by label.
///
/// Forking depends only on the stream's key, never on how many values have
/// already been drawn from it.
#[derive(Debug, Clone)]
pub struct SeededStream {
    key: StreamKey,
    rng: ChaCha8Rng,
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        Self::from_key(StreamKey::from_seed(seed))
    }

    pub fn from_key(key: StreamKey) -> Self {
        SeededStream { key, rng: ChaCha8Rng::seed_from_u64(key.0) }
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    pub fn fork(&self, label: &[u8]) -> SeededStream {
        self.key.fork(label).stream()
    }
}

/// Free-function form of [`SeededStream::fork`].
pub fn fork_stream(parent: &SeededStream, label: &[u8]) -> SeededStream {
    parent.fork(label)
}

impl RngCore for SeededStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
