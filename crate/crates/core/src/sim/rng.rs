use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random stream `stream` of the generator seeded with `seed`.
///
/// Replications use distinct seeds and vertices use distinct streams, so a
/// vertex's events never depend on how many other vertices were sampled or
/// in which order replications ran.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
