use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Explicit, reproducible generator state.
///
/// Backed by ChaCha8 seeded through `seed_from_u64`. Independent streams for
/// replicates are obtained with [`RngState::for_stream`], which selects a
/// ChaCha stream id under the same key, so `(seed, stream)` pairs never
/// overlap. Equal states produce bit-identical output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RngState {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self::for_stream(seed, 0)
    }

    pub fn for_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Child generator for sub-task `index`, derived without consuming from `self`.
    pub fn child(&self, index: u64) -> Self {
        Self::for_stream(self.seed, split_stream(self.stream, index))
    }
}

/// Stream id for child `index` of `parent`: a SplitMix64 finalizer over the pair.
pub fn split_stream(parent: u64, index: u64) -> u64 {
    let mut z = parent
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngCore for RngState {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
