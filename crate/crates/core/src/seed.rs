//! Splittable deterministic seeds.
//!
//! A run's master seed fans out into per-trial and per-station substreams so
//! that stations never share a random stream and trials can run in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// FNV-1a
fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

impl Seed {
    /// Child seed for a named substream.
    pub fn derive(self, label: &str) -> Seed {
        Seed(splitmix64(self.0 ^ splitmix64(label_hash(label))))
    }

    /// Child seed for the `index`-th trial.
    pub fn trial(self, index: u64) -> Seed {
        Seed(splitmix64(splitmix64(self.0).wrapping_add(index)))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}
