//! Seeded random streams.
//!
//! Every random decision in a run derives from one root seed. Each consumer
//! draws from its own ChaCha stream so that, for example, changing the
//! negative count does not perturb parameter initialization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Split = 1,
    Init = 2,
    Batch = 3,
    Negatives = 4,
    Hybrid = 5,
    Synthetic = 6,
    GradCheck = 7,
}

pub fn stream(seed: u64, which: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
