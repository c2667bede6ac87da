//! Fixtures shared by the benchmarks.

use cqcovert::random::{random_density, random_full_rank};
use cqcovert::sim::{sample_codebook, Codebook};
use cqcovert::{CqChannelPair, DensityOperator, EnsembleDistribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Full-rank pair of dimension `d`.
pub fn state_pair(d: usize, seed: u64) -> (DensityOperator, DensityOperator) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (random_density(&mut rng, d, d), random_full_rank(&mut rng, d, 0.05))
}

/// Three-symbol qubit channel with generic (non-commuting) outputs.
pub fn generic_channel(seed: u64) -> CqChannelPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = (0..3).map(|_| random_full_rank(&mut rng, 2, 0.1)).collect();
    CqChannelPair::symmetric(states).expect("valid states")
}

pub fn codebook(ch: &CqChannelPair, n: usize, m: usize, seed: u64) -> Codebook {
    let p = EnsembleDistribution::uniform(ch.alphabet_size() - 1);
    sample_codebook(ch, n, m, 1, 0.9, &p, seed).expect("valid codebook")
}
