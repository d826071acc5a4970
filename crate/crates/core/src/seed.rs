//! Sub-seed derivation. Every random stream is keyed by the master seed, an
//! identifier (usually the agent id) and a stage name, so adding agents or
//! stages never shifts the streams of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Diary,
    Trajectory,
    Pings,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Diary, Stage::Trajectory, Stage::Pings];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Diary => "diary",
            Stage::Trajectory => "trajectory",
            Stage::Pings => "pings",
        }
    }
}

/// First eight bytes (little-endian) of SHA-256 over the master seed, the
/// length-prefixed key and the stage label.
pub fn derive_seed_labeled(master: u64, key: &str, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((key.len() as u64).to_le_bytes());
    h.update(key.as_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn derive_seed(master: u64, key: &str, stage: Stage) -> u64 {
    derive_seed_labeled(master, key, stage.as_str())
}

pub fn stage_rng(master: u64, key: &str, stage: Stage) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, key, stage))
}

/// Key used for Monte-Carlo replicate `index`.
pub fn replicate_key(index: usize) -> String {
    format!("replicate-{index}")
}
