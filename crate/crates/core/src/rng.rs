//! Reproducible random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the experiment seed and a
//! purpose tag, with the replica index as the stream number. Streams are
//! therefore independent of scheduling and of the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Provenance of a random stream.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub tag: String,
    pub replica: u64,
}

impl SeedRecord {
    pub fn new(seed: u64, tag: &str, replica: u64) -> Self {
        SeedRecord {
            seed,
            tag: tag.to_string(),
            replica,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        stream(self.seed, &self.tag, self.replica)
    }
}

// FNV-1a, used only to turn the tag into key material with a stable value.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Generator for `(seed, tag, replica)`.
pub fn stream(seed: u64, tag: &str, replica: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&fnv1a(tag.as_bytes()).to_le_bytes());
    key[16..24].copy_from_slice(&(tag.len() as u64).to_le_bytes());
    key[24..].copy_from_slice(b"affsim\x00\x01");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replica);
    rng
}
