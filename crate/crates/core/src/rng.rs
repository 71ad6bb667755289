//! Named, independent random streams derived from a single run seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Consumers of randomness within one run. Each gets its own ChaCha stream so
/// that adding draws in one place never shifts another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    NetworkInit,
    MixtureInit,
    DesignSampling,
    Episodes,
    Exploration,
    Replay,
    Evaluation,
    Summary,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::NetworkInit => 1,
            Stream::MixtureInit => 2,
            Stream::DesignSampling => 3,
            Stream::Episodes => 4,
            Stream::Exploration => 5,
            Stream::Replay => 6,
            Stream::Evaluation => 7,
            Stream::Summary => 8,
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}

/// A generator keyed by `(seed, which, index)`, e.g. one per iteration.
pub fn indexed(seed: u64, which: Stream, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&which.id().to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    key[24] = 1;
    ChaCha8Rng::from_seed(key)
}
