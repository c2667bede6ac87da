//! Exact small-blocklength simulation of random covert codes.

mod decoder;
mod experiment;
mod nogo;
mod willie;

pub use decoder::{build_srm_decoder, build_srm_decoder_in, exact_pe_bob, DecoderPovm, ProductEigenbasis, DECODER_TOL};
pub use experiment::{
    code_sizes, load_experiment, regenerate_codebook, run_experiment, select_best, write_csv, BlockSummary, CodeSizes,
    ExperimentConfig, ExperimentFile, ExperimentResult, TrialReport, CSV_HEADER,
};
pub use nogo::{nogo_experiment, orthogonal_overlaps, NoGoReport};
pub use willie::{covertness_report, willie_average_state, CovertnessMethod, CovertnessReport};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::CqChannelPair;
use crate::divergence::EnsembleDistribution;
use crate::error::{Error, Result};

/// `M K` codewords of length `n`; row `k M + m` holds message `m` under key `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub seed: u64,
    /// Input alphabet size including the innocent symbol.
    pub alphabet: usize,
    pub codewords: Vec<Vec<usize>>,
}

impl Codebook {
    /// Codebook with explicit codewords, listed key-major.
    pub fn from_codewords(codewords: Vec<Vec<usize>>, m: usize, k: usize, alphabet: usize) -> Result<Self> {
        if m == 0 || k == 0 || codewords.len() != m * k {
            return Err(Error::IndexMismatch(format!("{} codewords for M = {m}, K = {k}", codewords.len())));
        }
        let n = codewords[0].len();
        if n == 0 || codewords.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidArgument("codewords must share a positive length".into()));
        }
        if let Some(bad) = codewords.iter().flatten().find(|&&x| x >= alphabet) {
            return Err(Error::InvalidArgument(format!("symbol {bad} outside alphabet of size {alphabet}")));
        }
        Ok(Self { n, m, k, gamma: f64::NAN, alpha: f64::NAN, seed: 0, alphabet, codewords })
    }

    pub fn codeword(&self, message: usize, key: usize) -> &[usize] {
        &self.codewords[key * self.m + message]
    }

    /// Codewords of one key, indexed by message.
    pub fn key_slice(&self, key: usize) -> &[Vec<usize>] {
        &self.codewords[key * self.m..(key + 1) * self.m]
    }

    pub fn is_all_innocent(&self) -> bool {
        self.codewords.iter().flatten().all(|&x| x == 0)
    }
}

/// Samples each symbol independently: innocent with probability `1 - alpha`,
/// otherwise `x` with probability `alpha ptilde(x)`, where `alpha = gamma / sqrt(n)`.
pub fn sample_codebook(
    ch: &CqChannelPair,
    n: usize,
    m: usize,
    k: usize,
    gamma: f64,
    ptilde: &EnsembleDistribution,
    seed: u64,
) -> Result<Codebook> {
    if n == 0 || m == 0 || k == 0 {
        return Err(Error::InvalidArgument("n, M and K must be positive".into()));
    }
    let alphabet = ch.alphabet_size();
    let alpha = gamma / (n as f64).sqrt();
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    if ptilde.len() + 1 != alphabet {
        return Err(Error::InvalidDistribution(format!(
            "ptilde has {} entries for {} non-innocent symbols",
            ptilde.len(),
            alphabet - 1
        )));
    }
    let mut cdf = Vec::with_capacity(ptilde.len());
    let mut acc = 0.0;
    for p in ptilde.probs() {
        acc += p;
        cdf.push(acc);
    }
    let last_active = ptilde.probs().iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let codewords = (0..m * k)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    if u >= alpha {
                        return 0;
                    }
                    let v: f64 = rng.random();
                    let idx = cdf.iter().position(|&c| v < c).unwrap_or(last_active);
                    idx + 1
                })
                .collect()
        })
        .collect();
    Ok(Codebook { n, m, k, gamma, alpha, seed, alphabet, codewords })
}
