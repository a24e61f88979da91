//! Reproducible random streams for replicate-parallel Monte Carlo.
//!
//! A replicate's generator is a pure function of `(master_seed, stream,
//! replicate)`: the stream label and master seed fix a ChaCha key, and the
//! replicate index selects the ChaCha stream. Results therefore do not depend
//! on how replicates are scheduled across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// The generator handed to every simulation kernel.
pub type SimRng = ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// FNV-1a; stable across platforms and compiler versions, unlike `DefaultHasher`.
fn fnv1a(label: &str) -> u64 {
    label
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

/// A labelled family of independent random streams derived from one master seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedStream {
    master: u64,
    label: String,
    key: [u8; 32],
}

impl SeedStream {
    pub fn new(master: u64, label: &str) -> Self {
        let mut state = master ^ fnv1a(label).rotate_left(17);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self {
            master,
            label: label.to_owned(),
            key,
        }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// A child family, e.g. one per configuration inside an experiment.
    pub fn substream(&self, label: &str) -> Self {
        Self::new(self.master, &format!("{}/{}", self.label, label))
    }

    /// Generator for one replicate.
    pub fn rng(&self, replicate: u64) -> SimRng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(replicate);
        rng
    }

    /// Runs `f` once per replicate on the current rayon pool and returns the
    /// results in replicate order.
    pub fn map_replicates<T, F>(&self, replicates: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut SimRng, u64) -> T + Sync,
    {
        (0..replicates).into_par_iter().map(|r| f(&mut self.rng(r), r)).collect()
    }
}
