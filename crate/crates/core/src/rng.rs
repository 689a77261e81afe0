//! Labeled, splittable random streams.
//!
//! A stream is identified by `(seed, label path)`. Its ChaCha8 key is the
//! SHA-256 of the seed and the length-prefixed labels, so a child stream never
//! depends on how much of its parent has been consumed, and adding a new
//! consumer under a fresh label never perturbs the existing ones.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    path: Vec<String>,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_path(seed, Vec::new())
    }

    fn with_path(seed: u64, path: Vec<String>) -> Self {
        let mut h = Sha256::new();
        h.update(b"marlkit.rng");
        h.update(seed.to_le_bytes());
        for label in &path {
            h.update((label.len() as u64).to_le_bytes());
            h.update(label.as_bytes());
        }
        let key: [u8; 32] = h.finalize().into();
        Self {
            seed,
            path,
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    /// Child stream under `label`, independent of this stream's position.
    pub fn split(&self, label: &str) -> RngStream {
        let mut path = self.path.clone();
        path.push(label.to_owned());
        Self::with_path(self.seed, path)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[String] {
        &self.path
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}
