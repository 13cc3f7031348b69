//! Seed derivation. Every random quantity in a run comes from a ChaCha8
//! stream selected by `(master seed, purpose, id)`, so runs replay exactly and
//! different algorithms see the same per-node noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// What a derived stream is used for. The discriminant occupies the top byte
/// of the ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    Problem = 1,
    ActiveSet = 2,
    TokenPermutation = 3,
    GradientNoise = 4,
}

const ID_MASK: u64 = (1 << 56) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamPlan {
    seed: u64,
}

impl StreamPlan {
    pub fn new(seed: u64) -> Self {
        StreamPlan { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The stream for `(purpose, id)`. Pure in its arguments.
    pub fn stream(&self, purpose: Purpose, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((purpose as u64) << 56) | (id & ID_MASK));
        rng
    }

    pub fn problem(&self) -> ChaCha8Rng {
        self.stream(Purpose::Problem, 0)
    }

    /// Shared stream used by every node to agree on round `round`'s active set.
    pub fn active_set(&self, round: u64) -> ChaCha8Rng {
        self.stream(Purpose::ActiveSet, round)
    }

    pub fn token_permutation(&self, round: u64) -> ChaCha8Rng {
        self.stream(Purpose::TokenPermutation, round)
    }

    /// Gradient-noise stream owned by physical node `node` (1-based).
    pub fn node_noise(&self, node: usize) -> ChaCha8Rng {
        self.stream(Purpose::GradientNoise, node as u64)
    }
}
