//! Counter-based random streams: every (purpose, index) pair owns a fixed
//! window of a ChaCha keystream, so results do not depend on thread count or
//! on the order in which rows and sites are generated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const STREAM_EXACT: u64 = 1;
pub(crate) const STREAM_GIBBS: u64 = 2;
pub(crate) const STREAM_NOISE: u64 = 3;
pub(crate) const STREAM_EXPERIMENT: u64 = 4;

/// 32-bit words reserved per index; far more than any single draw consumes.
const WINDOW: u128 = 64;

/// Generator positioned at the window for `index` within stream `stream`.
pub(crate) fn stream_at(seed: u64, stream: u64, index: u128) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(index * WINDOW);
    rng
}
