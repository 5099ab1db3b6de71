//! Counter-based random streams keyed by `(seed, experiment, trial, column)`.
//!
//! Every random draw in the crate goes through a [`StreamKey`]. A key names a
//! logical stream; [`StreamKey::column`] turns it into a ChaCha8 generator
//! whose 256-bit key is a hash of `(seed, experiment, trial)` and whose
//! 64-bit stream id is the column index. Two keys that differ in any
//! component give unrelated sequences, and no stream ever depends on how
//! many draws another stream has consumed. That is what makes results
//! independent of the scheduling of trials across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type handed to samplers.
pub type Stream = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey {
    seed: u64,
    experiment: u64,
    trial: u64,
}

impl StreamKey {
    pub fn new(seed: u64, experiment: &str) -> Self {
        Self {
            seed,
            experiment: fnv1a64(experiment.as_bytes()),
            trial: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Key for trial `t` of the same experiment.
    pub fn trial(self, t: u64) -> Self {
        Self { trial: t, ..self }
    }

    /// Child key for a named role inside a trial (e.g. `"x"` vs `"z"`).
    pub fn derive(self, label: &str) -> Self {
        Self {
            experiment: mix64(self.experiment ^ mix64(fnv1a64(label.as_bytes()))),
            ..self
        }
    }

    /// Generator for column `c` of this key.
    pub fn column(&self, c: u64) -> Stream {
        let mut key = [0u8; 32];
        let mut state = mix64(
            self.seed
                .wrapping_mul(0xA076_1D64_78BD_642F)
                .wrapping_add(mix64(self.experiment))
                ^ mix64(self.trial.wrapping_add(0xE703_7ED1_A0B4_28DB)),
        );
        for chunk in key.chunks_exact_mut(8) {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            chunk.copy_from_slice(&mix64(state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(c);
        rng
    }

    /// Generator for single-stream consumers.
    pub fn stream(&self) -> Stream {
        self.column(u64::MAX)
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
