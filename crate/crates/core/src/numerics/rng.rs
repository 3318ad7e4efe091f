use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every stochastic step.
pub type SeedRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream for `(seed, path...)`. Streams for distinct paths do
/// not depend on how many values any other stream consumed.
pub fn derive_rng(seed: u64, path: &[u64]) -> SeedRng {
    let mut state = splitmix64(seed);
    for &p in path {
        state = splitmix64(state ^ splitmix64(p.wrapping_add(0x5851_f42d_4c95_7f2d)));
    }
    SeedRng::seed_from_u64(state)
}
