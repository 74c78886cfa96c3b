//! Seeded random streams. Every sampler takes an explicit seed; distinct
//! stages draw from distinct ChaCha streams so adding draws to one stage
//! never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream identifiers for the experiment stages.
pub mod stream {
    pub const COMBINATIONS: u64 = 1;
    pub const LAYOUTS: u64 = 2;
    pub const SEQUENCE: u64 = 3;
}

pub fn stage_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Independent generator for item `index` within a stage.
pub fn item_rng(seed: u64, stream: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(stream);
    rng
}
