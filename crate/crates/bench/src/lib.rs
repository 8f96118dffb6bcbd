//! Seeded inputs shared by the benchmarks in `benches/`.

use growthcast::rng::rng_from_seed;
use rand::Rng;

/// Step-shaped upward series of `n` points.
pub fn trend(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let mut level = 1000.0;
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.2) {
                level += rng.gen_range(0.0..40.0);
            }
            level
        })
        .collect()
}

/// Uniform vectors on [0, 1).
pub fn uniform(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| rng.gen()).collect()
}

/// `groups` labelled groups of `size` integer scores in `0..levels`.
pub fn scored_groups(groups: usize, size: usize, levels: u32, seed: u64) -> Vec<(String, Vec<f64>)> {
    let mut rng = rng_from_seed(seed);
    (0..groups).map(|g| (format!("g{g}"), (0..size).map(|_| rng.gen_range(0..levels) as f64).collect())).collect()
}
