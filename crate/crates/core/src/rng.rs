// SPDX-License-Identifier: MIT OR Apache-2.0

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Generator recorded in report metadata. ChaCha20 is counter based, so a
/// `(seed, stream)` pair names the same sequence on every platform.
pub const RNG_NAME: &str = "ChaCha20 (rand_chacha 0.9, seed_from_u64 + set_stream)";

pub type Rng = ChaCha20Rng;

pub fn stream_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
