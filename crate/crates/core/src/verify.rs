//! Seeded randomized property suites over the divergence and channel code.
//!
//! Each case draws its inputs from a seed derived from the master seed, the
//! suite and the case index, so any failing case can be regenerated exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::CqChannelPair;
use crate::divergence::{
    chi_squared, phi_functional, psi_functional, relative_entropy, relative_entropy_sandwich, trace_distance,
    EnsembleDistribution,
};
use crate::error::{Error, Result};
use crate::operator::{
    kron_power, pinching, spectral_projection_nonneg, trace_product, DensityOperator, HermitianMatrix, MatrixJson,
};
use crate::random::{
    derive_seed, random_density, random_diagonal_density, random_full_rank, random_hermitian, random_simplex,
};
use crate::scaling::{converse_bounds, lemma7_expansion_check, log_grid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// `||rho - sigma||_1^2 / 2 <= D(rho||sigma)`.
    Pinsker,
    /// Power-trace lower and upper bounds on `D`.
    Sandwich,
    /// `Tr{B A {A < 0}} <= 0 <= Tr{B A {A > 0}}` for `B > 0`.
    Lemma4,
    /// Pinching commutes with its reference, preserves traces against
    /// commuting operators and does not increase `D`.
    Pinching,
    /// Analytic `phi'` and `psi'` against finite differences.
    Derivatives,
    /// `D(alpha C + (1 - alpha) B || B) - alpha^2 chi2 / 2 = O(alpha^3)`.
    Lemma7,
    /// `chi(pbar, rho) = mu sum ptilde D(rho_x||rho_0) - D(rho_mu||rho_0)`.
    Holevo,
    /// Divergences of diagonal states against scalar formulas.
    Commuting,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Pinsker,
        Suite::Sandwich,
        Suite::Lemma4,
        Suite::Pinching,
        Suite::Derivatives,
        Suite::Lemma7,
        Suite::Holevo,
        Suite::Commuting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Pinsker => "pinsker",
            Suite::Sandwich => "sandwich",
            Suite::Lemma4 => "lemma4",
            Suite::Pinching => "pinching",
            Suite::Derivatives => "derivatives",
            Suite::Lemma7 => "lemma7",
            Suite::Holevo => "holevo",
            Suite::Commuting => "commuting",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite {s:?}")))
    }

    /// Dimensions swept; the trial count applies to each.
    pub fn dims(self) -> &'static [usize] {
        match self {
            Suite::Pinsker | Suite::Sandwich | Suite::Lemma4 | Suite::Commuting => &[2, 3, 4, 5, 6],
            Suite::Pinching => &[2, 3],
            Suite::Derivatives | Suite::Lemma7 | Suite::Holevo => &[2, 3, 4],
        }
    }

    pub fn default_trials(self) -> usize {
        match self {
            Suite::Pinsker => 1000,
            Suite::Sandwich => 100,
            Suite::Lemma4 => 200,
            Suite::Pinching => 200,
            Suite::Derivatives => 34,
            Suite::Lemma7 => 50,
            Suite::Holevo => 34,
            Suite::Commuting => 500,
        }
    }

    fn index(self) -> u64 {
        Self::ALL.iter().position(|&s| s == self).unwrap() as u64
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One failing check with the inputs that produced it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseFailure {
    pub case: usize,
    pub dim: usize,
    pub seed: u64,
    pub check: String,
    /// Signed slack of the inequality; negative beyond `-tolerance` fails.
    pub slack: f64,
    pub tolerance: f64,
    pub inputs: Vec<MatrixJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: Suite,
    pub cases: usize,
    pub checks: usize,
    pub failures: usize,
    /// Smallest slack over all checks.
    pub worst_margin: f64,
    pub passed: bool,
    /// First failing checks, at most [`MAX_REPORTED`].
    pub failing: Vec<CaseFailure>,
}

pub const MAX_REPORTED: usize = 20;

struct Check {
    name: String,
    slack: f64,
    tol: f64,
}

impl Check {
    fn new(name: impl Into<String>, slack: f64, tol: f64) -> Self {
        // NaN must never pass.
        let slack = if slack.is_nan() { f64::NEG_INFINITY } else { slack };
        Self { name: name.into(), slack, tol }
    }

    fn failed(&self) -> bool {
        self.slack < -self.tol
    }
}

struct CaseOutcome {
    checks: Vec<Check>,
    inputs: Vec<MatrixJson>,
}

fn inputs(states: &[&HermitianMatrix]) -> Vec<MatrixJson> {
    states.iter().map(|s| MatrixJson::from_matrix(s.matrix())).collect()
}

fn pinsker_case(rng: &mut ChaCha8Rng, d: usize) -> Result<CaseOutcome> {
    let rank = rng.random_range(1..=d);
    let rho = random_density(rng, d, rank);
    let floor = rng.random_range(0.0..0.5);
    let sigma = random_full_rank(rng, d, floor);
    let div = relative_entropy(&rho, &sigma)?.value();
    let t = trace_distance(&rho, &sigma)?;
    Ok(CaseOutcome {
        checks: vec![Check::new("D - T^2/2", div - 0.5 * t * t, 1e-9)],
        inputs: inputs(&[rho.hermitian(), sigma.hermitian()]),
    })
}

fn sandwich_case(rng: &mut ChaCha8Rng, d: usize) -> Result<CaseOutcome> {
    let a = random_full_rank(rng, d, 0.05);
    let b = random_full_rank(rng, d, 0.05);
    let div = relative_entropy(&a, &b)?.value();
    let mut checks = Vec::new();
    for c in [0.1, 0.5, 1.0] {
        let (lo, hi) = relative_entropy_sandwich(&a, &b, c)?;
        checks.push(Check::new(format!("lower c={c}"), div - lo, 1e-8));
        checks.push(Check::new(format!("upper c={c}"), hi - div, 1e-8));
    }
    Ok(CaseOutcome { checks, inputs: inputs(&[a.hermitian(), b.hermitian()]) })
}

fn lemma4_case(rng: &mut ChaCha8Rng, d: usize) -> Result<CaseOutcome> {
    let a = random_hermitian(rng, d);
    let b = random_full_rank(rng, d, 0.1);
    let neg = spectral_projection_nonneg(&a, false).complement();
    let pos = spectral_projection_nonneg(&a, true);
    let ba = b.matrix() * a.matrix();
    let t_neg = trace_product(&ba, neg.matrix()).re;
    let t_pos = trace_product(&ba, pos.matrix()).re;
    let scale = a.trace_norm().max(1.0);
    Ok(CaseOutcome {
        checks: vec![
            Check::new("-Tr{B A {A<0}}", -t_neg, 1e-12 * scale),
            Check::new("Tr{B A {A>0}}", t_pos, 1e-12 * scale),
        ],
        inputs: inputs(&[&a, b.hermitian()]),
    })
}

fn pinching_case(rng: &mut ChaCha8Rng, d: usize) -> Result<CaseOutcome> {
    // The tensor square has degenerate eigenvalues, exercising the clusters.
    let single = random_full_rank(rng, d, 0.1);
    let a = kron_power(&single, 2)?;
    let dim = d * d;
    let rank = rng.random_range(1..=dim);
    let b = random_density(rng, dim, rank);
    let pinched = pinching(a.hermitian(), b.hermitian())?;
    let comm = pinched.matrix() * a.matrix() - a.matrix() * pinched.matrix();
    let c = a.apply(crate::operator::MatrixFunction::Log);
    let before = trace_product(b.matrix(), c.matrix()).re;
    let after = trace_product(pinched.matrix(), c.matrix()).re;
    let pinched = DensityOperator::from_hermitian(pinched, b.rank_tolerance())?;
    let d_before = relative_entropy(&b, &a)?.value();
    let d_after = relative_entropy(&pinched, &a)?.value();
    Ok(CaseOutcome {
        checks: vec![
            Check::new("commutator norm", -comm.norm(), 1e-10),
            Check::new("trace against commuting operator", -(before - after).abs(), 1e-10 * before.abs().max(1.0)),
            Check::new("data processing", d_before - d_after, 1e-9),
        ],
        inputs: inputs(&[a.hermitian(), b.hermitian()]),
    })
}

/// Central difference with one Richardson step.
fn richardson(f: &dyn Fn(f64) -> Result<f64>, r: f64, h: f64) -> Result<f64> {
    let c = |h: f64| -> Result<f64> { Ok((f(r + h)? - f(r - h)?) / (2.0 * h)) };
    Ok((4.0 * c(h / 2.0)? - c(h)?) / 3.0)
}

/// Second-order one-sided difference at `r`, looking only at `r, r + h, r + 2h`.
fn forward(f: &dyn Fn(f64) -> Result<f64>, r: f64, h: f64) -> Result<f64> {
    Ok((-3.0 * f(r)? + 4.0 * f(r + h)? - f(r + 2.0 * h)?) / (2.0 * h))
}

fn derivatives_case(rng: &mut ChaCha8Rng, d: usize) -> Result<CaseOutcome> {
    let s1 = random_full_rank(rng, d, 0.1);
    let s0 = random_full_rank(rng, d, 0.1);
    let div = relative_entropy(&s1, &s0)?.value();
    let phi = |r: f64| phi_functional(&s1, &s0, r).map(|v| v.0);
    let psi = |r: f64| psi_functional(&s1, &s0, r).map(|v| v.0);
    let h = 1e-5;
    let mut checks = Vec::new();
    for r in [0.0, 0.1, 0.5, 0.9] {
        let (p, dp) = phi_functional(&s1, &s0, r)?;
        let (q, dq) = psi_functional(&s1, &s0, r)?;
        let (fp, fq) = if r == 0.0 {
            (forward(&phi, r, h)?, forward(&psi, r, h)?)
        } else {
            (richardson(&phi, r, h)?, richardson(&psi, r, h)?)
        };
        checks.push(Check::new(format!("phi' r={r}"), -(dp - fp).abs(), 1e-6));
        checks.push(Check::new(format!("psi' r={r}"), -(dq - fq).abs(), 1e-6));
        if r == 0.0 {
            checks.push(Check::new("phi(0)", -p.abs(), 1e-12));
            checks.push(Check::new("psi(0)", -q.abs(), 1e-12));
            checks.push(Check::new("phi'(0) = D", -(dp - div).abs(), 1e-8));
            checks.push(Check::new("psi'(0) = D", -(dq - div).abs(), 1e-8));
        }
    }
    Ok(CaseOutcome { checks, inputs: inputs(&[s1.hermitian(), s0.hermitian()]) })
}

/// Grid used for the expansion slope.
pub fn lemma7_alphas() -> Vec<f64> {
    log_grid(1e-3, 1e-1, 9)
}

fn lemma7_case(rng: &mut ChaCha8Rng, d: usize) -> Result<CaseOutcome> {
    let b = random_full_rank(rng, d, 0.5);
    let c = random_density(rng, d, d);
    let rep = lemma7_expansion_check(&b, &c, &lemma7_alphas())?;
    let slope = rep.slope.unwrap_or(f64::NAN);
    let at = lemma7_expansion_check(&b, &c, &[1e-2])?;
    let row = &at.rows[0];
    let rel = (row.divergence - row.leading).abs() / row.divergence.abs().max(f64::MIN_POSITIVE);
    Ok(CaseOutcome {
        checks: vec![
            Check::new("slope >= 2.7", slope - 2.7, 0.0),
            Check::new("slope <= 3.3", 3.3 - slope, 0.0),
            Check::new("relative error at 1e-2", 0.05 - rel, 0.0),
        ],
        inputs: inputs(&[b.hermitian(), c.hermitian()]),
    })
}

fn holevo_case(rng: &mut ChaCha8Rng, d: usize) -> Result<CaseOutcome> {
    let symbols = rng.random_range(2..=4);
    let states: Vec<DensityOperator> = (0..symbols).map(|_| random_full_rank(rng, d, 0.05)).collect();
    let ptilde = EnsembleDistribution::normalized(random_simplex(rng, symbols - 1))?;
    let ch = CqChannelPair::symmetric(states)?;
    let mut checks = Vec::new();
    for mu in [0.01, 0.1] {
        let cb = converse_bounds(&ch, &ptilde, mu, 1, 0.5, 0.0)?;
        checks.push(Check::new(format!("identity mu={mu}"), -(cb.willie_identity - cb.holevo_willie).abs(), 1e-8));
        checks.push(Check::new(format!("linear bound mu={mu}"), cb.willie_linear - cb.holevo_willie, 1e-8));
    }
    let hs: Vec<&HermitianMatrix> = ch.willie().iter().map(|s| s.hermitian()).collect();
    Ok(CaseOutcome { checks, inputs: inputs(&hs) })
}

fn commuting_case(rng: &mut ChaCha8Rng, d: usize) -> Result<CaseOutcome> {
    let p = random_diagonal_density(rng, d, 0.0);
    let q = random_diagonal_density(rng, d, 0.01);
    let pv: Vec<f64> = (0..d).map(|i| p.matrix()[(i, i)].re).collect();
    let qv: Vec<f64> = (0..d).map(|i| q.matrix()[(i, i)].re).collect();
    let kl: f64 = pv.iter().zip(&qv).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b).ln()).sum();
    let chi: f64 = pv.iter().zip(&qv).map(|(a, b)| (a - b) * (a - b) / b).sum();
    let tv: f64 = pv.iter().zip(&qv).map(|(a, b)| (a - b).abs()).sum();
    let err = |got: f64, want: f64| -(got - want).abs() / want.abs().max(1.0);
    Ok(CaseOutcome {
        checks: vec![
            Check::new("relative entropy", err(relative_entropy(&p, &q)?.value(), kl), 1e-9),
            Check::new("chi squared", err(chi_squared(&p, &q)?.value(), chi), 1e-9),
            Check::new("trace distance", err(trace_distance(&p, &q)?, tv), 1e-9),
        ],
        inputs: inputs(&[p.hermitian(), q.hermitian()]),
    })
}

fn run_case(suite: Suite, rng: &mut ChaCha8Rng, d: usize) -> Result<CaseOutcome> {
    match suite {
        Suite::Pinsker => pinsker_case(rng, d),
        Suite::Sandwich => sandwich_case(rng, d),
        Suite::Lemma4 => lemma4_case(rng, d),
        Suite::Pinching => pinching_case(rng, d),
        Suite::Derivatives => derivatives_case(rng, d),
        Suite::Lemma7 => lemma7_case(rng, d),
        Suite::Holevo => holevo_case(rng, d),
        Suite::Commuting => commuting_case(rng, d),
    }
}

/// Runs `trials` cases per dimension (the suite default when `None`).
pub fn run_suite(suite: Suite, trials: Option<usize>, seed: u64) -> Result<SuiteResult> {
    let per_dim = trials.unwrap_or(suite.default_trials());
    let suite_seed = derive_seed(seed, suite.index());
    let jobs: Vec<(usize, usize)> = suite.dims().iter().flat_map(|&d| (0..per_dim).map(move |t| (d, t))).collect();
    let outcomes: Vec<(usize, u64, CaseOutcome)> = jobs
        .par_iter()
        .enumerate()
        .map(|(case, &(d, _))| {
            let case_seed = derive_seed(suite_seed, case as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
            run_case(suite, &mut rng, d).map(|o| (d, case_seed, o))
        })
        .collect::<Result<_>>()?;
    let mut res = SuiteResult {
        suite,
        cases: outcomes.len(),
        checks: 0,
        failures: 0,
        worst_margin: f64::INFINITY,
        passed: true,
        failing: Vec::new(),
    };
    for (case, (dim, seed, out)) in outcomes.into_iter().enumerate() {
        for chk in &out.checks {
            res.checks += 1;
            res.worst_margin = res.worst_margin.min(chk.slack);
            if chk.failed() {
                res.failures += 1;
                if res.failing.len() < MAX_REPORTED {
                    res.failing.push(CaseFailure {
                        case,
                        dim,
                        seed,
                        check: chk.name.clone(),
                        slack: chk.slack,
                        tolerance: chk.tol,
                        inputs: out.inputs.clone(),
                    });
                }
            }
        }
    }
    res.passed = res.failures == 0;
    Ok(res)
}

pub fn run_suites(suites: &[Suite], trials: Option<usize>, seed: u64) -> Result<Vec<SuiteResult>> {
    suites.iter().map(|&s| run_suite(s, trials, seed)).collect()
}
