//! Counter-based random streams.
//!
//! Every stochastic component draws from a ChaCha stream addressed by
//! `(root seed, stream id)`, so a simulation indexed `i` sees the same
//! numbers whether it runs alone, in a batch, or on another thread.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream `stream` of the generator keyed by `root`.
pub fn stream(root: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(stream);
    rng
}

/// Derive an independent root seed for a sub-component.
pub fn child_seed(root: u64, tag: u64) -> u64 {
    stream(root, tag).next_u64()
}

/// Derive a seed from a path of tags, e.g. `[round, purpose]`.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter().fold(root, |seed, &tag| child_seed(seed, tag))
}
