//! Seeded random source with keyed substreams.
//!
//! Every stream is a ChaCha8 generator whose 256-bit key is derived from the
//! root seed and a path of integer labels. Deriving `substream(&[episode, slot])`
//! never advances the parent, so work split across threads draws the same
//! numbers regardless of scheduling.

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

#[derive(Debug, Clone)]
pub struct Rng {
    key: [u64; 4],
    inner: ChaCha8Rng,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix_label(key: [u64; 4], label: u64) -> [u64; 4] {
    let mut out = [0u64; 4];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut s = key[i]
            ^ label.rotate_left(17 * i as u32 + 1)
            ^ (i as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93);
        *slot = splitmix64(&mut s) ^ splitmix64(&mut s).rotate_left(32);
    }
    out
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut s = seed;
        let key = [
            splitmix64(&mut s),
            splitmix64(&mut s),
            splitmix64(&mut s),
            splitmix64(&mut s),
        ];
        Self::from_key(key)
    }

    fn from_key(key: [u64; 4]) -> Self {
        let mut bytes = [0u8; 32];
        for (chunk, word) in bytes.chunks_exact_mut(8).zip(key) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        Self {
            key,
            inner: ChaCha8Rng::from_seed(bytes),
        }
    }

    /// Independent stream identified by `labels`, derived from this stream's key.
    pub fn substream(&self, labels: &[u64]) -> Rng {
        let mut key = self.key;
        for &label in labels {
            key = mix_label(key, label);
        }
        Self::from_key(key)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }

    pub fn gamma(&mut self, shape: f64, scale: f64) -> f64 {
        Gamma::new(shape, scale)
            .expect("validated Gamma parameters")
            .sample(&mut self.inner)
    }

    /// Index drawn with probability proportional to `weights`.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let u = self.uniform() * total;
        let mut acc = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    }
}
