//! Seed splitting.
//!
//! Every random stream is derived from a single run seed and a role label:
//! the sub-seed is the first eight bytes (little-endian) of
//! `SHA-256(seed.to_le_bytes() || label.as_bytes())`, and the stream is a
//! ChaCha8 generator seeded from it. Labels used by this crate:
//!
//! | label                   | stream                                   |
//! |-------------------------|------------------------------------------|
//! | `train/init`            | encoder and head-embedding initialization |
//! | `train/shuffle`         | mini-batch order                         |
//! | `synth/centers`         | cluster centers                          |
//! | `synth/questions`       | cluster membership, features, outcomes   |
//! | `synth/dedicated`       | dedicated head per cluster               |
//! | `eval/random/{seed}`    | random-head draws for one evaluation seed |
//! | `attn/weights`, `attn/input` | attention demo instances            |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng_for(seed: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, label))
}
