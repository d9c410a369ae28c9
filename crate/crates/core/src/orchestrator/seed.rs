/// Seed of training game `game_idx`: the SplitMix64 finalizer applied to
/// `primary_seed ^ game_idx`. Distinct for distinct indices under a fixed primary seed.
pub fn game_seed(primary_seed: u64, game_idx: u64) -> u64 {
    let mut z = (primary_seed ^ game_idx).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Primary seed of the evaluation games run at training step `step`, kept apart from the
/// training seed stream.
pub fn eval_seed(primary_seed: u64, step: u64) -> u64 {
    game_seed(game_seed(primary_seed, u64::MAX), step)
}
