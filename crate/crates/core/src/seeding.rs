use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent RNG substream for `(seed, stream)`. Results that use one
/// substream per trial do not depend on how trials are scheduled.
pub(crate) fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Packs up to three small indices into one stream id.
pub(crate) fn stream_id(a: u64, b: u64, c: u64) -> u64 {
    (a << 48) ^ (b << 24) ^ c
}
