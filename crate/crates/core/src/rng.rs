use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Every random stream in the crate is a ChaCha8 generator derived from a
/// user seed plus a fixed per-purpose salt, so independent consumers of the
/// same seed never share a stream.
pub(crate) fn stream(seed: u64, salt: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(salt);
    rng
}

pub(crate) mod salt {
    pub const AUGMENT_VIEW1: u64 = 1;
    pub const AUGMENT_VIEW2: u64 = 2;
    pub const SYNTH: u64 = 3;
    pub const INIT: u64 = 4;
    pub const SHUFFLE: u64 = 5;
    pub const KMEANS: u64 = 6;
    pub const PERTURB: u64 = 7;
}
