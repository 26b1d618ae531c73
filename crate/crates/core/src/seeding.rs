use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent deterministic stream `stream` under a run seed.
///
/// Per-image and per-tree randomness derive from here, so results do not depend on
/// scheduling order.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed for an independent sub-task of a run (sampling, forest growth, cross-validation).
pub fn derive_seed(seed: u64, domain: u64) -> u64 {
    use rand::RngCore;
    stream_rng(seed, u64::MAX - domain).next_u64()
}
