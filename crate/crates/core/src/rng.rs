//! Seeded random streams.
//!
//! Every stochastic step draws from a ChaCha stream keyed by a master seed and
//! a stream index, so results never depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SpellRng = ChaCha8Rng;

/// Independent substream `stream` of the master `seed`.
pub fn substream(seed: u64, stream: u64) -> SpellRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stable 64-bit stream index for a textual task label (FNV-1a).
pub fn stream_id(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Substream for a labelled task, e.g. `"SYN/year/ws/gof/dm"`.
pub fn task_stream(seed: u64, label: &str) -> SpellRng {
    substream(seed, stream_id(label))
}

/// A 64-bit seed for a labelled task, for APIs that derive their own
/// substreams from a seed.
pub fn task_seed(seed: u64, label: &str) -> u64 {
    use rand::Rng;
    task_stream(seed, label).random()
}
