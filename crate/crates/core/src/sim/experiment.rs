use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{load_channel, CqChannelPair};
use crate::divergence::{relative_entropy, EnsembleDistribution};
use crate::error::{Error, Result};
use crate::operator::{checked_power_dim, DensityOperator};
use crate::random::derive_seed;
use crate::scaling::{CoefficientModel, ScalingReport};

use super::decoder::{build_srm_decoder_in, exact_pe_bob, ProductEigenbasis};
use super::willie::covertness_report;
use super::{sample_codebook, Codebook};

pub const CSV_HEADER: &str = "n,gamma,seed,logM_nats,logK_nats,pe_bob,covert_D_nats,pe_willie";

fn default_knob() -> f64 {
    0.1
}
fn default_trials() -> usize {
    20
}
fn default_delta() -> f64 {
    0.5
}
fn default_epsilon() -> f64 {
    0.125
}
fn default_max_key() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_values: Vec<usize>,
    pub gamma: f64,
    #[serde(default = "default_knob")]
    pub varsigma: f64,
    #[serde(default = "default_knob")]
    pub mu: f64,
    #[serde(default = "default_knob")]
    pub nu: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_delta")]
    pub delta_target: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon_target: f64,
    /// Over the non-innocent symbols; uniform over the admissible ones if absent.
    #[serde(default)]
    pub ptilde: Option<Vec<f64>>,
    /// Overrides the key count derived from the key-size formula.
    #[serde(default)]
    pub key_count: Option<usize>,
    #[serde(default = "default_max_key")]
    pub max_key: usize,
}

impl ExperimentConfig {
    pub fn new(n_values: Vec<usize>, gamma: f64) -> Self {
        Self {
            n_values,
            gamma,
            varsigma: default_knob(),
            mu: default_knob(),
            nu: default_knob(),
            trials: default_trials(),
            seed: 0,
            delta_target: default_delta(),
            epsilon_target: default_epsilon(),
            ptilde: None,
            key_count: None,
            max_key: default_max_key(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.into()));
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return bad("n list must be nonempty and positive");
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be nonnegative");
        }
        for (name, v) in [("varsigma", self.varsigma), ("mu", self.mu), ("nu", self.nu)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} = {v} outside [0, 1)")));
            }
        }
        if self.trials == 0 {
            return bad("trials must be positive");
        }
        if !(self.delta_target > 0.0) || !(self.epsilon_target > 0.0) {
            return bad("targets must be positive");
        }
        if self.max_key == 0 || self.key_count == Some(0) {
            return bad("key counts must be positive");
        }
        Ok(())
    }
}

/// Experiment config as stored on disk: a channel path plus the knobs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentFile {
    pub channel: PathBuf,
    #[serde(flatten)]
    pub config: ExperimentConfig,
}

/// Reads an experiment file; the channel path is relative to the file.
pub fn load_experiment(path: &Path) -> Result<(CqChannelPair, ExperimentConfig)> {
    let text = std::fs::read_to_string(path)?;
    let file: ExperimentFile = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    let chan_path = path.parent().unwrap_or(Path::new(".")).join(&file.channel);
    let ch = load_channel(&std::fs::read_to_string(&chan_path)?)?;
    Ok((ch, file.config))
}

/// Message and key sizes from the achievability formulas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeSizes {
    pub log_m_raw: f64,
    pub log_k_raw: f64,
    pub m: usize,
    pub k: usize,
    /// Decoder threshold `(1 - nu)(1 - mu) gamma sqrt(n) sum ptilde D_B`.
    pub a: f64,
}

fn round_up(log: f64) -> usize {
    let v = (log.exp() - 1e-9).ceil();
    if v.is_finite() && v >= 1.0 {
        v as usize
    } else {
        1
    }
}

/// `log M = (1 - s) gamma sqrt(n) D_B` and
/// `log K = [(1 + s) gamma sqrt(n) D_W - log M]^+`, rounded up to integers.
pub fn code_sizes(report: &ScalingReport, cfg: &ExperimentConfig, n: usize) -> CodeSizes {
    let scale = cfg.gamma * (n as f64).sqrt();
    let log_m_raw = (1.0 - cfg.varsigma) * scale * report.bob_divergence;
    let log_k_raw = ((1.0 + cfg.varsigma) * scale * report.willie_divergence - log_m_raw).max(0.0);
    let m = round_up(log_m_raw);
    let k = cfg.key_count.unwrap_or_else(|| round_up(log_k_raw).min(cfg.max_key));
    let a = (1.0 - cfg.nu) * (1.0 - cfg.mu) * scale * report.bob_divergence;
    CodeSizes { log_m_raw, log_k_raw, m, k, a }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub n: usize,
    pub gamma: f64,
    pub trial: usize,
    pub seed: u64,
    /// `ln M` of the integer code size.
    pub log_m: f64,
    pub log_k: f64,
    pub m: usize,
    pub k: usize,
    /// Bob's exact error, averaged over keys.
    pub pe_bob: f64,
    /// `D(rho_bar^n || rho_0^{(x)n})` in nats; `inf` when supports leak.
    pub covert_d: f64,
    pub pe_willie: f64,
    /// The codebook is all-innocent, so nothing is signalled.
    pub no_signal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub n: usize,
    pub alpha: f64,
    pub sizes: CodeSizes,
    /// `n D(rho_alpha || rho_0)` for the ensemble average state.
    pub ensemble_d: f64,
    /// `gamma^2 chi^2(rho_tilde || rho_0)`.
    pub lemma2_bound: f64,
    pub best: TrialReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub ptilde: EnsembleDistribution,
    pub coefficients: ScalingReport,
    pub trials: Vec<TrialReport>,
    pub summaries: Vec<BlockSummary>,
}

/// Index of the report minimizing `max(pe_bob / delta, D / epsilon)`; ties go to the first.
pub fn select_best(reports: &[TrialReport], delta: f64, epsilon: f64) -> Option<usize> {
    let score = |r: &TrialReport| (r.pe_bob / delta).max(r.covert_d / epsilon);
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in reports.iter().enumerate() {
        let s = score(r);
        if best.is_none_or(|(_, b)| s < b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

fn resolve_ptilde(model: &CoefficientModel, cfg: &ExperimentConfig, num_active: usize) -> Result<EnsembleDistribution> {
    if let Some(p) = &cfg.ptilde {
        return EnsembleDistribution::new(p.clone());
    }
    let mut p = vec![0.0; num_active];
    let w = 1.0 / model.admissible().len() as f64;
    for &x in model.admissible() {
        p[x - 1] = w;
    }
    EnsembleDistribution::normalized(p)
}

fn run_trial(
    ch: &CqChannelPair,
    basis: &Arc<ProductEigenbasis>,
    cfg: &ExperimentConfig,
    ptilde: &EnsembleDistribution,
    sizes: &CodeSizes,
    n: usize,
    trial: usize,
) -> Result<TrialReport> {
    let seed = derive_seed(derive_seed(cfg.seed, n as u64), trial as u64);
    let cb = sample_codebook(ch, n, sizes.m, sizes.k, cfg.gamma, ptilde, seed)?;
    let dec = build_srm_decoder_in(basis, &cb, sizes.a)?;
    let mut pe = 0.0;
    for key in 0..cb.k {
        pe += exact_pe_bob(&cb, ch, &dec, key)?;
    }
    let cov = covertness_report(&cb, ch)?;
    Ok(TrialReport {
        n,
        gamma: cfg.gamma,
        trial,
        seed,
        log_m: (sizes.m as f64).ln(),
        log_k: (sizes.k as f64).ln(),
        m: sizes.m,
        k: sizes.k,
        pe_bob: pe / cb.k as f64,
        covert_d: cov.divergence.value(),
        pe_willie: cov.helstrom_pe,
        no_signal: cb.is_all_innocent(),
    })
}

fn alpha_state(ch: &CqChannelPair, ptilde: &EnsembleDistribution, alpha: f64) -> Result<DensityOperator> {
    let mut weights = vec![1.0 - alpha];
    weights.extend(ptilde.probs().iter().map(|p| alpha * p));
    let refs: Vec<&DensityOperator> = ch.willie().iter().collect();
    DensityOperator::mixture(&weights, &refs)
}

/// Runs every `(n, trial)` pair in parallel. Trial seeds depend only on the
/// master seed, `n` and the trial index, so results do not depend on the
/// number of worker threads.
pub fn run_experiment(ch: &CqChannelPair, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let model = CoefficientModel::new(ch)?;
    let ptilde = resolve_ptilde(&model, cfg, ch.num_active())?;
    let coefficients = model.report(&ptilde)?;
    for &n in &cfg.n_values {
        checked_power_dim(ch.bob_dim(), n)?;
        checked_power_dim(ch.willie_dim(), n)?;
        let alpha = cfg.gamma / (n as f64).sqrt();
        if !(alpha < 1.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
    }
    let mut plans = Vec::with_capacity(cfg.n_values.len());
    for &n in &cfg.n_values {
        let basis = Arc::new(ProductEigenbasis::new(ch, n)?);
        plans.push((n, basis, code_sizes(&coefficients, cfg, n)));
    }
    let jobs: Vec<(usize, usize)> = (0..plans.len()).flat_map(|p| (0..cfg.trials).map(move |t| (p, t))).collect();
    let trials: Vec<TrialReport> = jobs
        .par_iter()
        .map(|&(p, t)| {
            let (n, basis, sizes) = &plans[p];
            run_trial(ch, basis, cfg, &ptilde, sizes, *n, t)
        })
        .collect::<Result<_>>()?;
    let mut summaries = Vec::with_capacity(plans.len());
    for (p, (n, _, sizes)) in plans.iter().enumerate() {
        let block = &trials[p * cfg.trials..(p + 1) * cfg.trials];
        let best = select_best(block, cfg.delta_target, cfg.epsilon_target).expect("trials > 0");
        let alpha = cfg.gamma / (*n as f64).sqrt();
        let ensemble_d = *n as f64 * relative_entropy(&alpha_state(ch, &ptilde, alpha)?, &ch.willie()[0])?.value();
        summaries.push(BlockSummary {
            n: *n,
            alpha,
            sizes: *sizes,
            ensemble_d,
            lemma2_bound: cfg.gamma * cfg.gamma * coefficients.chi_squared,
            best: block[best].clone(),
        });
    }
    Ok(ExperimentResult { ptilde, coefficients, trials, summaries })
}

fn csv_row(w: &mut impl Write, r: &TrialReport, seed: &str) -> std::io::Result<()> {
    writeln!(w, "{},{},{},{},{},{},{},{}", r.n, r.gamma, seed, r.log_m, r.log_k, r.pe_bob, r.covert_d, r.pe_willie)
}

/// One row per trial in run order, then one summary row per `n` whose seed
/// column reads `best:<seed>`. Values are in nats.
pub fn write_csv(result: &ExperimentResult, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in &result.trials {
        csv_row(w, r, &r.seed.to_string())?;
    }
    for s in &result.summaries {
        csv_row(w, &s.best, &format!("best:{}", s.best.seed))?;
    }
    Ok(())
}

/// Codebook a trial report was computed from.
pub fn regenerate_codebook(ch: &CqChannelPair, cfg: &ExperimentConfig, report: &TrialReport) -> Result<Codebook> {
    let model = CoefficientModel::new(ch)?;
    let ptilde = resolve_ptilde(&model, cfg, ch.num_active())?;
    sample_codebook(ch, report.n, report.m, report.k, report.gamma, &ptilde, report.seed)
}
