use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

/// Derive a 32-byte ChaCha seed from a 64-bit world seed and a label path.
pub fn derive_key(seed: u64, label: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.finalize().into()
}

pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let k = derive_key(seed, label);
    u64::from_le_bytes(k[..8].try_into().unwrap())
}

/// Labeled substreams of one world seed. `stream` keeps its position across
/// calls; `coins` restarts from the beginning every time, so the same label
/// always yields the same randomness.
#[derive(Clone, Debug)]
pub struct Streams {
    seed: u64,
    live: HashMap<String, ChaCha20Rng>,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Streams { seed, live: HashMap::new() }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&mut self, label: &str) -> &mut ChaCha20Rng {
        let seed = self.seed;
        self.live
            .entry(label.to_string())
            .or_insert_with(|| ChaCha20Rng::from_seed(derive_key(seed, label)))
    }

    pub fn coins(&self, label: &str) -> ChaCha20Rng {
        ChaCha20Rng::from_seed(derive_key(self.seed, &format!("coins:{label}")))
    }
}
